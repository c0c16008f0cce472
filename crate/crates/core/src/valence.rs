//! Mapping free-text valences to up/down arrows.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::cluster::fold;
use crate::error::{Error, Result};
use crate::label::ValenceTopic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arrow {
    #[serde(rename = "UP")]
    Up,
    #[serde(rename = "DOWN")]
    Down,
}

impl Arrow {
    pub fn flip(self) -> Arrow {
        match self {
            Arrow::Up => Arrow::Down,
            Arrow::Down => Arrow::Up,
        }
    }

    /// `UP` / `DOWN`.
    pub fn code(self) -> &'static str {
        match self {
            Arrow::Up => "UP",
            Arrow::Down => "DOWN",
        }
    }

    /// `↑` / `↓`.
    pub fn symbol(self) -> &'static str {
        match self {
            Arrow::Up => "\u{2191}",
            Arrow::Down => "\u{2193}",
        }
    }
}

impl fmt::Display for Arrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Valence terms per direction, plus topic words whose presence reverses
/// the arrow ("rising vulnerability" is bad news, so it points down).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValenceDictionary {
    pub up: BTreeSet<String>,
    pub down: BTreeSet<String>,
    #[serde(default)]
    pub negative_topics: Vec<String>,
}

impl ValenceDictionary {
    pub fn new<S: AsRef<str>>(up: &[S], down: &[S], negative_topics: &[S]) -> Result<Self> {
        let up: BTreeSet<String> = up.iter().map(|s| fold(s.as_ref())).collect();
        let down: BTreeSet<String> = down.iter().map(|s| fold(s.as_ref())).collect();
        let dict = ValenceDictionary {
            up,
            down,
            negative_topics: negative_topics.iter().map(|s| fold(s.as_ref())).collect(),
        };
        dict.validate()?;
        Ok(dict)
    }

    /// Terms must be non-empty and belong to one direction only.
    pub fn validate(&self) -> Result<()> {
        if let Some(term) = self.up.intersection(&self.down).next() {
            return Err(Error::invalid("valence dictionary", alloc::format!("{term:?} is both up and down")));
        }
        let all = self.up.iter().chain(&self.down).chain(&self.negative_topics);
        if all.into_iter().any(|t| t.trim().is_empty()) {
            return Err(Error::EmptyInput("valence dictionary term"));
        }
        Ok(())
    }

    pub fn lookup(&self, valence: &str) -> Option<Arrow> {
        let v = fold(valence);
        if self.up.contains(&v) {
            Some(Arrow::Up)
        } else if self.down.contains(&v) {
            Some(Arrow::Down)
        } else {
            None
        }
    }

    /// Whether the topic contains a negative-polarity word.
    pub fn is_negative_topic(&self, topic: &str) -> bool {
        let t = fold(topic);
        t.split(|c: char| !c.is_alphanumeric() && c != '-')
            .any(|w| self.negative_topics.iter().any(|n| n == w))
            || self.negative_topics.iter().any(|n| n.contains(' ') && t.contains(n.as_str()))
    }
}

/// The arrow for a label. Unknown valence terms are errors so they can be
/// logged and added to the dictionary.
pub fn normalize_valence(vt: &ValenceTopic, dict: &ValenceDictionary) -> Result<Arrow> {
    let arrow = dict
        .lookup(&vt.valence)
        .ok_or_else(|| Error::invalid("valence", alloc::format!("unknown term {:?}", vt.valence)))?;
    Ok(if dict.is_negative_topic(&vt.topic) {
        arrow.flip()
    } else {
        arrow
    })
}
