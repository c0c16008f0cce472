//! Splitting compound events into atomic ones, and expanding a narrative
//! over the split events.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::gateway::ChatBackend;
use crate::narrative::RawNarrative;
use crate::prompt::PromptBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicEvent {
    pub text: String,
    /// Id of the narrative the event belongs to.
    pub parent: String,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub atoms: Vec<String>,
    /// Why the event was kept unsplit, if the answer was unusable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn strings(items: &[Value]) -> core::result::Result<Vec<String>, String> {
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        match item {
            Value::String(s) if !s.trim().is_empty() => out.push(s.trim().to_string()),
            _ => return Err("list holds a non-string or empty entry".to_string()),
        }
    }
    if out.is_empty() {
        return Err("empty list".to_string());
    }
    Ok(out)
}

/// Accepts a JSON list of strings or an object with a single list under any
/// key (usually `"events"`).
pub fn parse_decomposition(text: &str) -> core::result::Result<Vec<String>, String> {
    let value: Value = serde_json::from_str(text.trim()).map_err(|e| alloc::format!("not JSON: {e}"))?;
    match &value {
        Value::Array(items) => strings(items),
        Value::Object(obj) => {
            let lists: Vec<&Vec<Value>> = obj.values().filter_map(Value::as_array).collect();
            match lists.as_slice() {
                [one] => strings(one),
                _ => Err("expected exactly one list in the object".to_string()),
            }
        }
        _ => Err("expected a list of strings".to_string()),
    }
}

/// Asks the model to split `event`. Service failures are errors; an
/// unusable answer keeps the event whole.
pub fn decompose_event<B: ChatBackend + ?Sized>(
    backend: &B,
    bundle: &PromptBundle,
    event: &AtomicEvent,
) -> Result<Decomposition> {
    let response = backend.complete(&bundle.to_request())?;
    Ok(match parse_decomposition(&response) {
        Ok(atoms) => Decomposition { atoms, note: None },
        Err(reason) => {
            log::warn!("keeping event of {} unsplit: {reason}", event.parent);
            Decomposition {
                atoms: alloc::vec![event.text.clone()],
                note: Some(reason),
            }
        }
    })
}

/// One narrative per (atom of A, atom of B), A-major. Derived narratives
/// get ids `<id>.<k>` counting from 1, drop the trace and point back to the
/// original. A 1 x 1 expansion returns the original narrative untouched.
pub fn expand_forks(n: &RawNarrative, atoms_a: &[String], atoms_b: &[String]) -> Vec<RawNarrative> {
    let fallback_a = [n.pair.event_a.clone()];
    let fallback_b = [n.pair.event_b.clone()];
    let atoms_a = if atoms_a.is_empty() { &fallback_a[..] } else { atoms_a };
    let atoms_b = if atoms_b.is_empty() { &fallback_b[..] } else { atoms_b };
    if atoms_a.len() == 1 && atoms_b.len() == 1 {
        return alloc::vec![n.clone()];
    }
    let mut out = Vec::with_capacity(atoms_a.len() * atoms_b.len());
    for a in atoms_a {
        for b in atoms_b {
            let mut derived = n.clone();
            derived.id = alloc::format!("{}.{}", n.id, out.len() + 1);
            derived.pair.event_a = a.clone();
            derived.pair.event_b = b.clone();
            derived.trace = None;
            derived.derived_from = Some(n.id.clone());
            out.push(derived);
        }
    }
    out
}
