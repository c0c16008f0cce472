use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};

use crate::gold::{normalize_text, resolve_coref, CorefMode};
use crate::narrative::RawNarrative;

/// Lowercased whitespace tokens with leading and trailing punctuation
/// removed. Coreference tokens resolve to their entity first; text with
/// broken braces is tokenized with the braces dropped.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    let text = normalize_text(text);
    let resolved = resolve_coref(&text, CorefMode::Entity).unwrap_or_else(|_| text.replace(['{', '}', '|'], " "));
    resolved
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Tokens of both events; the connector is not included.
pub fn tokenize_narrative(n: &RawNarrative) -> BTreeSet<String> {
    let mut tokens = tokenize(&n.pair.event_a);
    tokens.extend(tokenize(&n.pair.event_b));
    tokens
}

/// |a ∩ b| / |a ∪ b|, with 1.0 for two empty sets.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Lowercased, whitespace-collapsed event text with corefs resolved; used to
/// spot shared causes and effects.
pub(crate) fn event_key(text: &str) -> String {
    let text = normalize_text(text);
    resolve_coref(&text, CorefMode::Entity).unwrap_or(text).to_lowercase().trim_end_matches('.').to_string()
}
