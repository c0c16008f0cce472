//! Corpus IO, the cached model gateway, stage orchestration and output
//! formats for the narrative extraction pipeline. The format-free logic
//! lives in `narrex-core`.

pub mod artifacts;
pub mod assets;
pub mod cache;
pub mod config;
pub mod corpus_io;
pub mod error;
pub mod gateway;
pub mod http;
pub mod reports;
pub mod review;
pub mod stages;
pub mod tables;

pub use config::{ConfigOverrides, RunConfig};
pub use error::{AppError, AppResult};
pub use stages::{Pipeline, Stage};
