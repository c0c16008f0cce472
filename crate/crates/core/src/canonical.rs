//! Cause-to-effect normal form of labeled narratives.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::narrative::Connector;
use crate::valence::Arrow;

/// One side of a normalized narrative: a direction and a cluster slug.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Part {
    pub arrow: Arrow,
    pub cluster: String,
}

impl Part {
    pub fn new(arrow: Arrow, cluster: impl Into<String>) -> Self {
        Part {
            arrow,
            cluster: cluster.into(),
        }
    }

    /// `UP inflation`.
    pub fn key(&self) -> String {
        alloc::format!("{} {}", self.arrow.code(), self.cluster)
    }

    /// `↑ inflation`.
    pub fn human(&self) -> String {
        alloc::format!("{} {}", self.arrow.symbol(), self.cluster.replace('_', " "))
    }
}

/// Two items in text order with the connector between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directed<T> {
    pub a: T,
    pub connector: Connector,
    pub b: T,
}

impl<T> Directed<T> {
    /// Rewrites `b caused-by a` style pairs so the cause comes first.
    pub fn canonical(self) -> Directed<T> {
        match self.connector {
            Connector::Causes => self,
            Connector::CausedBy => Directed {
                a: self.b,
                connector: Connector::Causes,
                b: self.a,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedNarrative {
    pub cause: Part,
    pub effect: Part,
    pub weight: u64,
    /// Ids of the narratives this one stands for.
    pub provenance: Vec<String>,
    /// Cause and effect are the same part.
    pub tautological: bool,
}

impl NormalizedNarrative {
    /// `UP monetary_policy -> UP inflation`.
    pub fn key(&self) -> String {
        alloc::format!("{} -> {}", self.cause.key(), self.effect.key())
    }

    /// `↑ monetary policy → ↑ inflation`.
    pub fn human(&self) -> String {
        alloc::format!("{} \u{2192} {}", self.cause.human(), self.effect.human())
    }
}

pub fn canonicalize_direction(pair: Directed<Part>, provenance: Vec<String>) -> NormalizedNarrative {
    let Directed { a: cause, b: effect, .. } = pair.canonical();
    if cause == effect {
        log::warn!("self-referential narrative {} -> {}", cause.key(), effect.key());
    }
    NormalizedNarrative {
        tautological: cause == effect,
        cause,
        effect,
        weight: 1,
        provenance,
    }
}
