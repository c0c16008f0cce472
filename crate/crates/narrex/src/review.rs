//! Cluster review: which topics landed where, what stayed out, and
//! override stanzas worth considering.

use std::collections::BTreeMap;
use std::fmt::Write;

use narrex_core::cluster::{AnchorCluster, Assignment, UnclusteredReason, Via};

use crate::artifacts::read_jsonl;
use crate::error::AppResult;
use crate::stages::{Pipeline, Stage, TopicRecord};

/// Below-threshold topics are suggested as synonyms only when they reach
/// this fraction of the threshold; weaker matches are noise.
const SUGGESTION_FLOOR: f64 = 0.5;

fn via(v: Via, anchor: &Option<String>) -> String {
    match (v, anchor) {
        (Via::Synonym, _) => "synonym".to_string(),
        (Via::Anchor, _) => "anchor".to_string(),
        (Via::Similarity, Some(a)) => format!("near {a:?}"),
        (Via::Similarity, None) => "similarity".to_string(),
    }
}

fn reason(r: UnclusteredReason) -> &'static str {
    match r {
        UnclusteredReason::Excluded => "excluded",
        UnclusteredReason::BelowThreshold => "below threshold",
        UnclusteredReason::EmbeddingFailed => "embedding failed",
    }
}

fn toml_list(items: &[&str]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| toml::Value::String(s.to_string()).to_string()).collect();
    format!("[{}]", quoted.join(", "))
}

/// Renders the review. Nothing to review gives an empty string.
pub fn render_review(clusters: &[AnchorCluster], topics: &[TopicRecord], threshold: f64) -> String {
    if topics.is_empty() {
        return String::new();
    }
    let mut members: BTreeMap<&str, Vec<(&TopicRecord, f64, String)>> = BTreeMap::new();
    let mut unclustered = Vec::new();
    for t in topics {
        match &t.assignment {
            Assignment::Clustered {
                label,
                similarity,
                via: v,
                anchor,
                ..
            } => members.entry(label).or_default().push((t, *similarity, via(*v, anchor))),
            Assignment::Unclustered {
                reason: r,
                nearest,
                similarity,
            } => unclustered.push((t, *r, nearest.as_deref(), *similarity)),
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "Cluster review (similarity threshold {threshold:.2})");
    for c in clusters {
        let Some(list) = members.get_mut(c.label.as_str()) else {
            continue;
        };
        list.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.topic.cmp(&y.0.topic)));
        let _ = writeln!(out);
        let _ = writeln!(out, "{} [{}]", c.label, c.slug());
        for (t, sim, how) in list.iter() {
            let _ = writeln!(out, "  {sim:.3}  {}  x{}  ({how})", t.topic, t.occurrences);
        }
    }
    if !unclustered.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Unclustered");
        for (t, r, nearest, sim) in &unclustered {
            let detail = match (nearest, sim) {
                (Some(n), Some(s)) => format!(", nearest {n} at {s:.3}"),
                _ => String::new(),
            };
            let _ = writeln!(out, "  {}  x{}  ({}{detail})", t.topic, t.occurrences, reason(*r));
        }
    }
    let mut suggestions: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (t, r, nearest, sim) in &unclustered {
        if let (UnclusteredReason::BelowThreshold, Some(n), Some(s)) = (r, nearest, sim) {
            if *s >= threshold * SUGGESTION_FLOOR {
                suggestions.entry(n).or_default().push(&t.topic);
            }
        }
    }
    if !suggestions.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Suggested overrides (merge into the cluster file after checking each topic)");
        for c in clusters {
            if let Some(list) = suggestions.get(c.label.as_str()) {
                let _ = writeln!(out);
                let _ = writeln!(out, "[[cluster]]");
                let _ = writeln!(out, "label = {}", toml::Value::String(c.label.clone()));
                let _ = writeln!(out, "include_synonyms = {}", toml_list(list));
            }
        }
    }
    out
}

/// Review of the last `normalize` run. Reads artifacts only.
pub fn review_clusters(pipeline: &Pipeline) -> AppResult<String> {
    pipeline.run_dir().require(Stage::Normalize.name())?;
    let topics: Vec<TopicRecord> = read_jsonl(&pipeline.run_dir().path(Stage::Normalize.name(), "topics.jsonl"))?;
    let (clusters, _) = pipeline.load_clusters()?;
    Ok(render_review(&clusters, &topics, pipeline.config().similarity_threshold))
}
