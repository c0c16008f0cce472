use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::matching::Matching;
use super::tokens::{event_key, jaccard, tokenize, tokenize_narrative};
use crate::error::{Error, Result};
use crate::narrative::RawNarrative;

pub const MISSED: &str = "missed narrative";
pub const HALLUCINATED: &str = "hallucinated narrative";
pub const DIRECTION_FLIPPED: &str = "direction flipped";
pub const MISSING_CONSEQUENCES: &str = "missing multiple consequences";
pub const MISSING_CAUSES: &str = "missing multiple causes";
pub const MISSING_COREFERENCE: &str = "missing coreference";
pub const WORDING_DIFFERS: &str = "wording differs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviationKind {
    Major,
    Minor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub kind: DeviationKind,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Set when the record comes from the override file.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub manual: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Major,
    Minor,
    Ok,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Override {
    pub verdict: Verdict,
    pub reason: String,
}

/// Manual classifications keyed by narrative id (predicted or gold).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    entries: BTreeMap<String, Override>,
}

impl Overrides {
    /// Parses lines of `id major|minor|ok reason`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, char::is_whitespace);
            let id = parts.next().unwrap_or_default();
            let verdict = match parts.next().map(str::trim) {
                Some("major") => Verdict::Major,
                Some("minor") => Verdict::Minor,
                Some("ok") => Verdict::Ok,
                other => {
                    return Err(Error::invalid("override", alloc::format!("bad verdict {other:?}")).at_line(i + 1));
                }
            };
            let reason = parts.next().map(str::trim).unwrap_or_default();
            let reason = if reason.is_empty() { "manual".to_string() } else { reason.to_string() };
            if entries.insert(id.to_string(), Override { verdict, reason }).is_some() {
                return Err(Error::invalid("override", alloc::format!("{id} listed twice")).at_line(i + 1));
            }
        }
        Ok(Overrides { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Override> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on the first id not in `known`.
    pub fn check_known<'a>(&self, known: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let known: BTreeSet<&str> = known.into_iter().collect();
        match self.ids().find(|id| !known.contains(id)) {
            Some(id) => Err(Error::UnknownNarrative(id.to_string())),
            None => Ok(()),
        }
    }

    /// The entries whose ids are in `ids`.
    pub fn restricted_to<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Overrides {
        let entries = ids
            .into_iter()
            .filter_map(|id| self.entries.get(id).map(|o| (id.to_string(), o.clone())))
            .collect();
        Overrides { entries }
    }
}

fn cause_effect_tokens(n: &RawNarrative) -> (BTreeSet<String>, BTreeSet<String>) {
    let (c, e) = n.pair.cause_effect();
    (tokenize(c), tokenize(e))
}

/// Whether the predicted narrative aligns better with the gold one after
/// swapping cause and effect.
pub fn is_flipped(predicted: &RawNarrative, gold: &RawNarrative) -> bool {
    let (pc, pe) = cause_effect_tokens(predicted);
    let (gc, ge) = cause_effect_tokens(gold);
    let straight = jaccard(&pc, &gc) + jaccard(&pe, &ge);
    let crossed = jaccard(&pc, &ge) + jaccard(&pe, &gc);
    crossed > straight
}

fn minor_reason(predicted: &RawNarrative, gold: &[RawNarrative], g: usize, unmatched_gold: &[usize]) -> &'static str {
    let (cause, effect) = gold[g].pair.cause_effect();
    let (cause, effect) = (event_key(cause), event_key(effect));
    let p_tokens = tokenize_narrative(predicted);
    for &u in unmatched_gold {
        let (uc, ue) = gold[u].pair.cause_effect();
        if event_key(uc) == cause && !tokenize(ue).is_disjoint(&p_tokens) {
            return MISSING_CONSEQUENCES;
        }
        if event_key(ue) == effect && !tokenize(uc).is_disjoint(&p_tokens) {
            return MISSING_CAUSES;
        }
    }
    let corefs = gold[g].markup.as_ref().map(|m| m.corefs.as_slice()).unwrap_or_default();
    if corefs
        .iter()
        .filter(|c| c.surface.is_some())
        .any(|c| !tokenize(&c.entity).is_subset(&p_tokens))
    {
        return MISSING_COREFERENCE;
    }
    WORDING_DIFFERS
}

/// Automatic classification, followed by manual overrides.
///
/// Unmatched gold narratives are missed and unmatched predictions are
/// hallucinated (both major). A matched pair is a major deviation if its
/// direction is flipped and a minor one if its score is below 1. Override
/// ids must belong to `predicted` or `gold`; a pair's override is looked up
/// by predicted id first.
pub fn classify_deviations(
    predicted: &[RawNarrative],
    gold: &[RawNarrative],
    m: &Matching,
    overrides: Option<&Overrides>,
) -> Result<Vec<DeviationRecord>> {
    let empty = Overrides::default();
    let overrides = overrides.unwrap_or(&empty);
    overrides.check_known(predicted.iter().chain(gold).map(|n| n.id.as_str()))?;

    let mut out = Vec::new();
    let mut push = |auto: Option<(DeviationKind, &str)>, p: Option<usize>, g: Option<usize>, score: Option<f64>| {
        let pid = p.map(|i| predicted[i].id.clone());
        let gid = g.map(|i| gold[i].id.clone());
        let manual = pid
            .as_deref()
            .and_then(|id| overrides.get(id))
            .or_else(|| gid.as_deref().and_then(|id| overrides.get(id)));
        let (kind, reason, manual) = match (manual, auto) {
            (Some(o), _) => match o.verdict {
                Verdict::Ok => return,
                Verdict::Major => (DeviationKind::Major, o.reason.clone(), true),
                Verdict::Minor => (DeviationKind::Minor, o.reason.clone(), true),
            },
            (None, Some((kind, reason))) => (kind, reason.to_string(), false),
            (None, None) => return,
        };
        out.push(DeviationRecord {
            kind,
            reason,
            predicted: pid,
            gold: gid,
            score,
            manual,
        });
    };

    for pair in &m.pairs {
        let (p, g) = (pair.predicted, pair.gold);
        let auto = if is_flipped(&predicted[p], &gold[g]) {
            Some((DeviationKind::Major, DIRECTION_FLIPPED))
        } else if pair.score < 1.0 {
            Some((DeviationKind::Minor, minor_reason(&predicted[p], gold, g, &m.unmatched_gold)))
        } else {
            None
        };
        push(auto, Some(p), Some(g), Some(pair.score));
    }
    for &g in &m.unmatched_gold {
        push(Some((DeviationKind::Major, MISSED)), None, Some(g), None);
    }
    for &p in &m.unmatched_predicted {
        push(Some((DeviationKind::Major, HALLUCINATED)), Some(p), None, None);
    }
    Ok(out)
}
