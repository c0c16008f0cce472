use alloc::boxed::Box;
use alloc::string::String;

use crate::gateway::ServiceError;

/// Result alias used throughout the core crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Why a gold-format narrative line was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldLineProblem {
    NoConnector,
    MultipleConnectors,
    EmptyEvent,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid {field}: {message}")]
    InvalidValue { field: &'static str, message: String },

    #[error("gold line {problem:?}: {text:?}")]
    GoldLine { problem: GoldLineProblem, text: String },

    #[error("unbalanced coreference braces in {0:?}")]
    UnbalancedBraces(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("response is not valid JSON: {0}")]
    NotJson(String),

    #[error("unexpected response shape: {0}")]
    UnexpectedShape(String),

    #[error("record {record} rejected: {message}")]
    RejectedRecord { record: usize, message: String },

    #[error("template placeholder {{{{{0}}}}} has no value")]
    MissingPlaceholder(String),

    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("cluster {0:?} does not occur in the narratives")]
    AbsentCluster(String),

    #[error("override references unknown narrative id {0:?}")]
    UnknownNarrative(String),

    #[error(transparent)]
    Service(#[from] ServiceError),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidValue {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }
}
