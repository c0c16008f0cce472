//! Frequency counts over normalized narratives.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::canonical::{NormalizedNarrative, Part};
use crate::cluster::slugify;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyEntry<K> {
    pub key: K,
    pub count: u64,
}

/// Counts sorted by descending count, then ascending key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable<K> {
    pub entries: Vec<FrequencyEntry<K>>,
    /// Items that could not be normalized and so carry no key.
    pub residual: u64,
}

impl<K: Ord + Clone> FrequencyTable<K> {
    pub fn from_counts(counts: BTreeMap<K, u64>) -> Self {
        let mut entries: Vec<FrequencyEntry<K>> =
            counts.into_iter().map(|(key, count)| FrequencyEntry { key, count }).collect();
        // BTreeMap order is ascending by key, so a stable sort on count keeps
        // the key tiebreak.
        entries.sort_by(|x, y| y.count.cmp(&x.count));
        FrequencyTable { entries, residual: 0 }
    }

    pub fn with_residual(mut self, residual: u64) -> Self {
        self.residual = residual;
        self
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn get(&self, key: &K) -> u64 {
        self.entries.iter().find(|e| &e.key == key).map_or(0, |e| e.count)
    }
}

/// Counts narratives by their `cause -> effect` key, summing weights.
pub fn count_narratives(narratives: &[NormalizedNarrative]) -> FrequencyTable<String> {
    let mut counts = BTreeMap::new();
    for n in narratives {
        *counts.entry(n.key()).or_insert(0) += n.weight;
    }
    FrequencyTable::from_counts(counts)
}

/// Counts parts; every narrative contributes its cause and its effect.
pub fn count_parts(narratives: &[NormalizedNarrative]) -> FrequencyTable<Part> {
    let mut counts = BTreeMap::new();
    for n in narratives {
        *counts.entry(n.cause.clone()).or_insert(0) += n.weight;
        *counts.entry(n.effect.clone()).or_insert(0) += n.weight;
    }
    FrequencyTable::from_counts(counts)
}

/// Share of a cluster's occurrences on the cause side and on the effect
/// side. `cluster` may be a label or a slug.
pub fn directional_shares(cluster: &str, narratives: &[NormalizedNarrative]) -> Result<(f64, f64)> {
    let slug = slugify(cluster);
    let (mut cause, mut effect) = (0u64, 0u64);
    for n in narratives {
        if n.cause.cluster == slug {
            cause += n.weight;
        }
        if n.effect.cluster == slug {
            effect += n.weight;
        }
    }
    let total = cause + effect;
    if total == 0 {
        return Err(Error::AbsentCluster(String::from(cluster)));
    }
    Ok((cause as f64 / total as f64, effect as f64 / total as f64))
}

/// Mean and population standard deviation, single pass.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("per-document counts"));
    }
    let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for &x in values {
        n += 1.0;
        let delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    Ok((mean, libm::sqrt(m2 / n)))
}

/// Mean and population standard deviation of narratives per document.
/// Documents with zero narratives must be present in the map.
pub fn per_document_stats(counts: &BTreeMap<String, u64>) -> Result<(f64, f64)> {
    let values: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    mean_std(&values)
}
