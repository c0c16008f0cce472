//! Agreement between predicted and reference narratives: token overlap,
//! one-to-one matching, deviation classification and corpus reports.

pub mod deviation;
pub mod matching;
pub mod report;
pub mod tokens;

pub use deviation::{classify_deviations, DeviationKind, DeviationRecord, Overrides};
pub use matching::{greedy_match, match_narratives, MatchPair, Matching, DEFAULT_MATCH_THRESHOLD};
pub use report::{compute_report, evaluate_corpus, evaluate_document, Baseline, DocumentEval, EvalReport, ReportSettings};
pub use tokens::{jaccard, tokenize, tokenize_narrative};
