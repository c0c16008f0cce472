use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::deviation::{classify_deviations, DeviationKind, DeviationRecord, Overrides};
use super::matching::{match_narratives, Matching};
use crate::error::{Error, Result};
use crate::gold::GoldDocument;
use crate::narrative::RawNarrative;

/// How the expert deviation rates are reduced to one baseline rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Mean,
    Min,
    Max,
}

impl Baseline {
    pub fn reduce(self, rates: &[f64]) -> Option<f64> {
        if rates.is_empty() {
            return None;
        }
        Some(match self {
            Baseline::Mean => rates.iter().sum::<f64>() / rates.len() as f64,
            Baseline::Min => rates.iter().copied().fold(f64::INFINITY, f64::min),
            Baseline::Max => rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Model major-deviation rate in excess of the expert baseline, floored at
/// zero. `None` without expert rates.
pub fn unexpected_rate(model_rate: f64, expert_rates: &[f64], baseline: Baseline) -> Option<f64> {
    baseline.reduce(expert_rates).map(|b| (model_rate - b).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentEval {
    pub doc_id: String,
    pub gold: usize,
    pub predicted: usize,
    pub matching: Matching,
    /// Gold narratives matched without a disqualifying deviation.
    pub correct: usize,
    pub majors: usize,
    pub minors: usize,
    pub jaccard: f64,
    pub deviations: Vec<DeviationRecord>,
}

/// Matches, classifies and scores one document.
///
/// The document Jaccard score averages over matched pairs, unmatched gold
/// and unmatched predictions alike, the unmatched ones scoring 0. A gold
/// narrative counts as correct when it is matched and its pair carries no
/// major deviation (and no minor one unless `minor_is_correct`).
pub fn evaluate_document(
    doc_id: &str,
    predicted: &[RawNarrative],
    gold: &[RawNarrative],
    threshold: f64,
    minor_is_correct: bool,
    overrides: Option<&Overrides>,
) -> Result<DocumentEval> {
    let matching = match_narratives(predicted, gold, threshold)?;
    let deviations = classify_deviations(predicted, gold, &matching, overrides)?;
    let disqualifies = |d: &DeviationRecord| d.kind == DeviationKind::Major || !minor_is_correct;
    let correct = matching
        .pairs
        .iter()
        .filter(|p| {
            let (pid, gid) = (&predicted[p.predicted].id, &gold[p.gold].id);
            !deviations.iter().any(|d| {
                disqualifies(d) && (d.predicted.as_ref() == Some(pid) || d.gold.as_ref() == Some(gid))
            })
        })
        .count();
    let items = matching.pairs.len() + matching.unmatched_gold.len() + matching.unmatched_predicted.len();
    let jaccard = if items == 0 {
        1.0
    } else {
        matching.pairs.iter().map(|p| p.score).sum::<f64>() / items as f64
    };
    Ok(DocumentEval {
        doc_id: doc_id.to_string(),
        gold: gold.len(),
        predicted: predicted.len(),
        correct,
        majors: deviations.iter().filter(|d| d.kind == DeviationKind::Major).count(),
        minors: deviations.iter().filter(|d| d.kind == DeviationKind::Minor).count(),
        jaccard,
        matching,
        deviations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub match_threshold: f64,
    pub baseline: Baseline,
    pub minor_is_correct: bool,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            match_threshold: super::matching::DEFAULT_MATCH_THRESHOLD,
            baseline: Baseline::Mean,
            minor_is_correct: true,
        }
    }
}

/// Evaluates predictions for every gold document. Predictions are keyed by
/// the gold document header; documents without predictions count as empty.
/// Override ids must exist somewhere in the corpus.
pub fn evaluate_corpus(
    gold: &[GoldDocument],
    predicted: &BTreeMap<String, Vec<RawNarrative>>,
    settings: &ReportSettings,
    overrides: Option<&Overrides>,
) -> Result<Vec<DocumentEval>> {
    if let Some(o) = overrides {
        let known = gold
            .iter()
            .flat_map(|d| d.narratives.iter())
            .chain(predicted.values().flatten())
            .map(|n| n.id.as_str());
        o.check_known(known)?;
    }
    for key in predicted.keys() {
        if !gold.iter().any(|d| &d.header() == key) {
            log::warn!("predictions for {key:?} have no gold document and are ignored");
        }
    }
    let empty = Vec::new();
    gold.iter()
        .map(|doc| {
            let header = doc.header();
            let preds = predicted.get(&header).unwrap_or(&empty);
            let local = overrides.map(|o| o.restricted_to(preds.iter().chain(&doc.narratives).map(|n| n.id.as_str())));
            evaluate_document(
                &header,
                preds,
                &doc.narratives,
                settings.match_threshold,
                settings.minor_is_correct,
                local.as_ref(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub documents: usize,
    pub gold_narratives: usize,
    pub predicted_narratives: usize,
    pub accuracy: f64,
    pub major_deviation_rate: f64,
    pub minor_deviation_rate: f64,
    pub mean_jaccard: f64,
    pub expert_major_rates: Vec<f64>,
    pub baseline: Baseline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unexpected_major_deviations: Option<f64>,
    pub minor_is_correct: bool,
    pub match_threshold: f64,
    pub per_document: Vec<DocumentEval>,
}

fn major_rate(docs: &[DocumentEval]) -> f64 {
    docs.iter().map(|d| d.majors).sum::<usize>() as f64 / docs.len() as f64
}

/// Corpus-level report for the model, with expert evaluations (one list per
/// expert) supplying the expected-deviation baseline.
pub fn compute_report(model: Vec<DocumentEval>, experts: &[Vec<DocumentEval>], settings: &ReportSettings) -> Result<EvalReport> {
    let gold_total: usize = model.iter().map(|d| d.gold).sum();
    if gold_total == 0 {
        return Err(Error::EmptyInput("gold narratives"));
    }
    let n = model.len() as f64;
    let expert_major_rates: Vec<f64> = experts
        .iter()
        .map(|e| if e.is_empty() { Err(Error::EmptyInput("expert evaluation")) } else { Ok(major_rate(e)) })
        .collect::<Result<_>>()?;
    let rate = major_rate(&model);
    Ok(EvalReport {
        documents: model.len(),
        gold_narratives: gold_total,
        predicted_narratives: model.iter().map(|d| d.predicted).sum(),
        accuracy: model.iter().map(|d| d.correct).sum::<usize>() as f64 / gold_total as f64,
        major_deviation_rate: rate,
        minor_deviation_rate: model.iter().map(|d| d.minors).sum::<usize>() as f64 / n,
        mean_jaccard: model.iter().map(|d| d.jaccard).sum::<f64>() / n,
        baseline_rate: settings.baseline.reduce(&expert_major_rates),
        unexpected_major_deviations: unexpected_rate(rate, &expert_major_rates, settings.baseline),
        expert_major_rates,
        baseline: settings.baseline,
        minor_is_correct: settings.minor_is_correct,
        match_threshold: settings.match_threshold,
        per_document: model,
    })
}
