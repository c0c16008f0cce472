//! Narrative data model shared by the model-output parser, the gold parser
//! and the evaluation code.
//!
//! A narrative is a pair of events joined by one of two connectors. The
//! connector records which event is the cause while the event order stays as
//! it appeared in the source text.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The closed causal-connector vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connector {
    /// Event A is the cause of event B.
    #[serde(rename = "causes")]
    Causes,
    /// Event B is the cause of event A.
    #[serde(rename = "caused by")]
    CausedBy,
}

impl Connector {
    /// Parses a connector exactly as it appears on the wire.
    ///
    /// Accepts `causes`, `caused by` (the JSON target-form spelling) and
    /// `is caused by` (the gold line spelling). Nothing else, not even case
    /// or whitespace variants.
    pub fn parse(s: &str) -> Option<Connector> {
        match s {
            "causes" => Some(Connector::Causes),
            "caused by" | "is caused by" => Some(Connector::CausedBy),
            _ => None,
        }
    }

    /// Spelling used in JSON target forms.
    pub fn wire(self) -> &'static str {
        match self {
            Connector::Causes => "causes",
            Connector::CausedBy => "caused by",
        }
    }

    /// Spelling used in gold annotation lines.
    pub fn gold(self) -> &'static str {
        match self {
            Connector::Causes => "causes",
            Connector::CausedBy => "is caused by",
        }
    }
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire())
    }
}

/// Two events and the connector between them, in source-text order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventPair {
    pub event_a: String,
    pub connector: Connector,
    pub event_b: String,
}

impl EventPair {
    pub fn new(event_a: impl Into<String>, connector: Connector, event_b: impl Into<String>) -> Result<Self> {
        let event_a = event_a.into();
        let event_b = event_b.into();
        if event_a.trim().is_empty() {
            return Err(Error::EmptyInput("event A"));
        }
        if event_b.trim().is_empty() {
            return Err(Error::EmptyInput("event B"));
        }
        Ok(EventPair {
            event_a,
            connector,
            event_b,
        })
    }

    /// The cause and effect texts, regardless of textual order.
    pub fn cause_effect(&self) -> (&str, &str) {
        match self.connector {
            Connector::Causes => (&self.event_a, &self.event_b),
            Connector::CausedBy => (&self.event_b, &self.event_a),
        }
    }
}

/// One parsed chain-of-thought record: the five staged outputs the model
/// emits for every narrative it extracts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotTrace {
    pub focused_excerpt: String,
    pub sequence_of_interest: String,
    pub causal_restatement: EventPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coreference_resolution: Option<EventPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_rephrasing: Option<EventPair>,
}

impl CotTrace {
    /// The last stage that is present.
    pub fn final_pair(&self) -> &EventPair {
        self.event_rephrasing
            .as_ref()
            .or(self.coreference_resolution.as_ref())
            .unwrap_or(&self.causal_restatement)
    }
}

/// Who produced a narrative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Model,
    Gold,
    Expert(u32),
}

impl Source {
    /// Short tag used when building narrative ids.
    pub fn tag(self) -> String {
        match self {
            Source::Model => String::from("model"),
            Source::Gold => String::from("gold"),
            Source::Expert(k) => alloc::format!("expert{k}"),
        }
    }
}

/// Inclusive sentence index range of an excerpt within its document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// A `{surface|entity}` coreference token from a gold line. Gold files also
/// contain entity-only tokens such as `{U.S. companies}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldCoref {
    pub surface: Option<String>,
    pub entity: String,
}

impl GoldCoref {
    pub fn render(&self) -> String {
        match &self.surface {
            Some(surface) => alloc::format!("{{{surface}|{}}}", self.entity),
            None => alloc::format!("{{{}}}", self.entity),
        }
    }
}

/// Annotation markup that only exists in the gold line format.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldMarkup {
    /// `(x)` written directly after event A.
    pub a_marked: bool,
    /// `(x)` written at the end of the line.
    pub b_marked: bool,
    /// Trailing `(?)` marker for uncertain annotations.
    pub uncertain: bool,
    pub corefs: Vec<GoldCoref>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawNarrative {
    pub id: String,
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excerpt_span: Option<Span>,
    pub pair: EventPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<CotTrace>,
    /// False iff the narrative carries no explicit reference to inflation.
    pub inflation_scope: bool,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markup: Option<GoldMarkup>,
    /// Id of the narrative this one was split from by fork expansion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<String>,
}

impl RawNarrative {
    pub fn with_ids(mut self, id: impl Into<String>, doc_id: impl Into<String>) -> Self {
        self.id = id.into();
        self.doc_id = doc_id.into();
        self
    }
}
