//! Mapping free-text topics onto a fixed set of anchor clusters.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{Embedder, ServiceError};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.5;

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = libm::sqrt(u.iter().map(|a| a * a).sum::<f64>());
    let nv = libm::sqrt(v.iter().map(|b| b * b).sum::<f64>());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Case- and whitespace-insensitive form used for exact matches.
pub fn fold(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Machine form of a cluster label: `Monetary policy` -> `monetary_policy`.
pub fn slugify(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('_') {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorCluster {
    pub label: String,
    pub anchors: Vec<String>,
    /// Topics assigned to this cluster without consulting embeddings.
    #[serde(default)]
    pub include_synonyms: Vec<String>,
    /// Topics that must never be clustered.
    #[serde(default)]
    pub exclude_terms: Vec<String>,
}

impl AnchorCluster {
    pub fn slug(&self) -> String {
        slugify(&self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Via {
    Synonym,
    Anchor,
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnclusteredReason {
    Excluded,
    BelowThreshold,
    EmbeddingFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assignment {
    Clustered {
        label: String,
        slug: String,
        similarity: f64,
        via: Via,
        /// The anchor phrase that decided the assignment, if any.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor: Option<String>,
    },
    Unclustered {
        reason: UnclusteredReason,
        /// Best cluster found, for review output.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nearest: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        similarity: Option<f64>,
    },
}

impl Assignment {
    pub fn slug(&self) -> Option<&str> {
        match self {
            Assignment::Clustered { slug, .. } => Some(slug),
            Assignment::Unclustered { .. } => None,
        }
    }

    fn unclustered(reason: UnclusteredReason) -> Self {
        Assignment::Unclustered {
            reason,
            nearest: None,
            similarity: None,
        }
    }
}

/// Clusters together with their anchor embeddings.
#[derive(Debug, Clone)]
pub struct ClusterIndex {
    clusters: Vec<AnchorCluster>,
    anchor_vectors: Vec<Vec<Vec<f64>>>,
    threshold: f64,
}

impl ClusterIndex {
    pub fn build<E: Embedder + ?Sized>(clusters: Vec<AnchorCluster>, threshold: f64, embedder: &E) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::EmptyInput("anchor clusters"));
        }
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::invalid("similarity threshold", alloc::format!("{threshold} outside (0, 1]")));
        }
        let mut seen = BTreeSet::new();
        for c in &clusters {
            if c.label.trim().is_empty() {
                return Err(Error::EmptyInput("cluster label"));
            }
            if !seen.insert(c.slug()) {
                return Err(Error::invalid("anchor clusters", alloc::format!("duplicate label {:?}", c.label)));
            }
            if c.anchors.iter().all(|a| a.trim().is_empty()) {
                return Err(Error::invalid("anchor clusters", alloc::format!("{:?} has no anchors", c.label)));
            }
        }
        let mut anchor_vectors = Vec::with_capacity(clusters.len());
        for c in &clusters {
            let vectors = embedder.embed(&c.anchors)?;
            if vectors.len() != c.anchors.len() {
                return Err(ServiceError::MalformedResponse("anchor embedding count".to_string()).into());
            }
            anchor_vectors.push(vectors);
        }
        Ok(ClusterIndex {
            clusters,
            anchor_vectors,
            threshold,
        })
    }

    pub fn clusters(&self) -> &[AnchorCluster] {
        &self.clusters
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn clustered(&self, idx: usize, similarity: f64, via: Via, anchor: Option<String>) -> Assignment {
        let c = &self.clusters[idx];
        Assignment::Clustered {
            label: c.label.clone(),
            slug: c.slug(),
            similarity,
            via,
            anchor,
        }
    }

    /// Synonym, exclusion and exact-anchor rules, in that order. `None`
    /// means the topic has to go through embedding similarity.
    pub fn assign_by_rules(&self, topic: &str) -> Option<Assignment> {
        let t = fold(topic);
        if let Some(i) = self
            .clusters
            .iter()
            .position(|c| c.include_synonyms.iter().any(|s| fold(s) == t))
        {
            return Some(self.clustered(i, 1.0, Via::Synonym, None));
        }
        if self.clusters.iter().any(|c| c.exclude_terms.iter().any(|s| fold(s) == t)) {
            return Some(Assignment::unclustered(UnclusteredReason::Excluded));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if let Some(anchor) = c.anchors.iter().find(|a| fold(a) == t) {
                return Some(self.clustered(i, 1.0, Via::Anchor, Some(anchor.clone())));
            }
        }
        None
    }

    /// Picks the cluster whose closest anchor is most similar to `v`. Ties go
    /// to the cluster listed first.
    pub fn assign_vector(&self, v: &[f64]) -> Assignment {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ci, anchors) in self.anchor_vectors.iter().enumerate() {
            for (ai, a) in anchors.iter().enumerate() {
                let sim = match cosine_similarity(v, a) {
                    Ok(s) => s,
                    Err(e) => {
                        log::warn!("cannot compare topic with anchor {:?}: {e}", self.clusters[ci].anchors[ai]);
                        return Assignment::unclustered(UnclusteredReason::EmbeddingFailed);
                    }
                };
                if best.is_none_or(|(_, _, b)| sim > b) {
                    best = Some((ci, ai, sim));
                }
            }
        }
        let Some((ci, ai, sim)) = best else {
            return Assignment::unclustered(UnclusteredReason::BelowThreshold);
        };
        if sim >= self.threshold {
            self.clustered(ci, sim, Via::Similarity, Some(self.clusters[ci].anchors[ai].clone()))
        } else {
            Assignment::Unclustered {
                reason: UnclusteredReason::BelowThreshold,
                nearest: Some(self.clusters[ci].label.clone()),
                similarity: Some(sim),
            }
        }
    }

    /// Full resolution: rules first, then embedding similarity. Embedding
    /// failures leave the topic unclustered.
    pub fn assign<E: Embedder + ?Sized>(&self, topic: &str, embedder: &E) -> Assignment {
        if let Some(a) = self.assign_by_rules(topic) {
            return a;
        }
        match embedder.embed(&[topic.to_string()]) {
            Ok(vs) if vs.len() == 1 => self.assign_vector(&vs[0]),
            Ok(_) => {
                log::warn!("embedding {topic:?} returned the wrong number of vectors");
                Assignment::unclustered(UnclusteredReason::EmbeddingFailed)
            }
            Err(e) => {
                log::warn!("embedding {topic:?} failed: {e}");
                Assignment::unclustered(UnclusteredReason::EmbeddingFailed)
            }
        }
    }
}
