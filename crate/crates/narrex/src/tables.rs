//! Tab-separated tables and the JSON summary written by `aggregate`.

use std::collections::BTreeMap;

use narrex_core::aggregate::{count_narratives, count_parts, directional_shares, per_document_stats, FrequencyTable};
use narrex_core::canonical::{NormalizedNarrative, Part};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeRow {
    pub key: String,
    pub human: String,
    pub count: u64,
    pub tautological: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartRow {
    pub arrow: String,
    pub cluster: String,
    pub human: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub cluster: String,
    pub occurrences: u64,
    pub cause_share: f64,
    pub effect_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRow {
    pub doc_id: String,
    pub extracted: u64,
    pub normalized: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub normalized_narratives: u64,
    /// Narratives left out of the counts: unlabeled, unclustered or with an
    /// unknown valence term.
    pub residual: u64,
    pub narratives: Vec<NarrativeRow>,
    pub parts: Vec<PartRow>,
    pub shares: Vec<ShareRow>,
    pub documents: Vec<DocumentRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_per_document: Option<CountStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_per_document: Option<CountStats>,
}

fn stats(counts: &BTreeMap<String, u64>) -> Option<CountStats> {
    per_document_stats(counts).ok().map(|(mean, std)| CountStats { mean, std })
}

/// Builds every table. `documents` maps each document id to
/// `(extracted, normalized)` counts and should include zero-count
/// documents.
pub fn summarize(narratives: &[NormalizedNarrative], residual: u64, documents: &BTreeMap<String, (u64, u64)>) -> Summary {
    let table: FrequencyTable<String> = count_narratives(narratives);
    let mut first: BTreeMap<String, &NormalizedNarrative> = BTreeMap::new();
    for n in narratives {
        first.entry(n.key()).or_insert(n);
    }
    let narrative_rows = table
        .entries
        .iter()
        .map(|e| NarrativeRow {
            key: e.key.clone(),
            human: first[&e.key].human(),
            count: e.count,
            tautological: first[&e.key].tautological,
        })
        .collect();
    let parts: FrequencyTable<Part> = count_parts(narratives);
    let part_rows = parts
        .entries
        .iter()
        .map(|e| PartRow {
            arrow: e.key.arrow.code().to_string(),
            cluster: e.key.cluster.clone(),
            human: e.key.human(),
            count: e.count,
        })
        .collect();
    let mut occurrences: BTreeMap<&str, u64> = BTreeMap::new();
    for n in narratives {
        *occurrences.entry(&n.cause.cluster).or_default() += n.weight;
        *occurrences.entry(&n.effect.cluster).or_default() += n.weight;
    }
    let shares = occurrences
        .iter()
        .filter_map(|(cluster, &count)| {
            let (cause_share, effect_share) = directional_shares(cluster, narratives).ok()?;
            Some(ShareRow {
                cluster: cluster.to_string(),
                occurrences: count,
                cause_share,
                effect_share,
            })
        })
        .collect();
    let document_rows = documents
        .iter()
        .map(|(id, &(extracted, normalized))| DocumentRow {
            doc_id: id.clone(),
            extracted,
            normalized,
        })
        .collect();
    let extracted: BTreeMap<String, u64> = documents.iter().map(|(k, v)| (k.clone(), v.0)).collect();
    let normalized: BTreeMap<String, u64> = documents.iter().map(|(k, v)| (k.clone(), v.1)).collect();
    Summary {
        normalized_narratives: table.total(),
        residual,
        narratives: narrative_rows,
        parts: part_rows,
        shares,
        documents: document_rows,
        extracted_per_document: stats(&extracted),
        normalized_per_document: stats(&normalized),
    }
}

fn cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn tsv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|c| cell(c)).collect::<Vec<_>>().join("\t"));
        out.push('\n');
    }
    out
}

pub fn narratives_tsv(s: &Summary) -> String {
    tsv(
        &["key", "narrative", "count", "tautological"],
        s.narratives
            .iter()
            .map(|r| vec![r.key.clone(), r.human.clone(), r.count.to_string(), r.tautological.to_string()]),
    )
}

pub fn parts_tsv(s: &Summary) -> String {
    tsv(
        &["arrow", "cluster", "part", "count"],
        s.parts
            .iter()
            .map(|r| vec![r.arrow.clone(), r.cluster.clone(), r.human.clone(), r.count.to_string()]),
    )
}

pub fn shares_tsv(s: &Summary) -> String {
    tsv(
        &["cluster", "occurrences", "cause_share", "effect_share"],
        s.shares.iter().map(|r| {
            vec![
                r.cluster.clone(),
                r.occurrences.to_string(),
                format!("{:.4}", r.cause_share),
                format!("{:.4}", r.effect_share),
            ]
        }),
    )
}

pub fn documents_tsv(s: &Summary) -> String {
    tsv(
        &["doc_id", "extracted", "normalized"],
        s.documents
            .iter()
            .map(|r| vec![r.doc_id.clone(), r.extracted.to_string(), r.normalized.to_string()]),
    )
}
