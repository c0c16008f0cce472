//! Core logic for extracting causal economic narratives from news text.
//!
//! Everything here is pure and allocation-only: sentence windows, prompt
//! assembly, parsing of model output and gold annotations, topic and valence
//! normalization, aggregation and evaluation metrics. Network access, files
//! and the command line live in the `narrex` crate, which plugs into the
//! [`gateway::ChatBackend`] and [`gateway::Embedder`] traits defined here.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod aggregate;
pub mod canonical;
pub mod cluster;
pub mod corpus;
pub mod cot;
pub mod decompose;
pub mod error;
pub mod eval;
pub mod gateway;
pub mod gold;
pub mod label;
pub mod narrative;
pub mod prompt;
pub mod valence;

pub use error::{Error, Result};
pub use narrative::{Connector, CotTrace, EventPair, RawNarrative, Source, Span};
