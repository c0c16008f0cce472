use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::tokens::{jaccard, tokenize_narrative};
use crate::error::{Error, Result};
use crate::narrative::RawNarrative;

/// Jaccard score below which two narratives are treated as unrelated.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub predicted: usize,
    pub gold: usize,
    pub score: f64,
}

/// A one-to-one matching between predicted and gold indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// Sorted by gold index.
    pub pairs: Vec<MatchPair>,
    pub unmatched_predicted: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl Matching {
    pub fn pair_for_gold(&self, gold: usize) -> Option<&MatchPair> {
        self.pairs.iter().find(|p| p.gold == gold)
    }
}

/// Orders candidate pairs: higher score first, then lower gold index, then
/// lower predicted index.
pub(crate) fn candidate_order(x: &MatchPair, y: &MatchPair) -> Ordering {
    y.score
        .total_cmp(&x.score)
        .then(x.gold.cmp(&y.gold))
        .then(x.predicted.cmp(&y.predicted))
}

/// Greedy matching over `scores[predicted][gold]`: repeatedly take the best
/// remaining pair at or above `threshold`.
pub fn greedy_match(scores: &[Vec<f64>], n_gold: usize, threshold: f64) -> Matching {
    let n_pred = scores.len();
    let mut candidates: Vec<MatchPair> = Vec::new();
    for (p, row) in scores.iter().enumerate() {
        debug_assert_eq!(row.len(), n_gold);
        for (g, &score) in row.iter().enumerate() {
            if score >= threshold {
                candidates.push(MatchPair {
                    predicted: p,
                    gold: g,
                    score,
                });
            }
        }
    }
    candidates.sort_by(candidate_order);
    let mut pred_used = alloc::vec![false; n_pred];
    let mut gold_used = alloc::vec![false; n_gold];
    let mut pairs = Vec::new();
    for c in candidates {
        if !pred_used[c.predicted] && !gold_used[c.gold] {
            pred_used[c.predicted] = true;
            gold_used[c.gold] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|p| p.gold);
    Matching {
        pairs,
        unmatched_predicted: (0..n_pred).filter(|&p| !pred_used[p]).collect(),
        unmatched_gold: (0..n_gold).filter(|&g| !gold_used[g]).collect(),
    }
}

pub fn score_matrix(predicted: &[RawNarrative], gold: &[RawNarrative]) -> Vec<Vec<f64>> {
    let gold_tokens: Vec<_> = gold.iter().map(tokenize_narrative).collect();
    predicted
        .iter()
        .map(|p| {
            let pt = tokenize_narrative(p);
            gold_tokens.iter().map(|gt| jaccard(&pt, gt)).collect()
        })
        .collect()
}

pub fn match_narratives(predicted: &[RawNarrative], gold: &[RawNarrative], threshold: f64) -> Result<Matching> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid("match threshold", alloc::format!("{threshold} outside (0, 1]")));
    }
    Ok(greedy_match(&score_matrix(predicted, gold), gold.len(), threshold))
}
