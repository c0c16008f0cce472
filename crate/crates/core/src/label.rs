//! Topic and valence labels for the two events of a narrative.

use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::gateway::ChatBackend;
use crate::prompt::PromptBundle;

/// A free-text topic and the direction it moves in, exactly as the model
/// wrote them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValenceTopic {
    pub topic: String,
    pub valence: String,
}

impl ValenceTopic {
    pub fn new(topic: impl Into<String>, valence: impl Into<String>) -> Result<Self> {
        let topic = topic.into();
        let valence = valence.into();
        if topic.trim().is_empty() {
            return Err(Error::EmptyInput("topic"));
        }
        if valence.trim().is_empty() {
            return Err(Error::EmptyInput("valence"));
        }
        Ok(ValenceTopic { topic, valence })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeLabels {
    pub a: ValenceTopic,
    pub b: ValenceTopic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LabelOutcome {
    Labeled(NarrativeLabels),
    Unlabeled { reason: String },
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.iter()
        .find(|(k, _)| k.to_lowercase().replace([' ', '-'], "_") == key)
        .map(|(_, v)| v)
}

fn side(obj: &Map<String, Value>, key: &str) -> core::result::Result<ValenceTopic, String> {
    let Some(Value::Object(inner)) = field(obj, key) else {
        return Err(alloc::format!("missing object \"{key}\""));
    };
    let text = |name: &str| match field(inner, name) {
        Some(Value::String(s)) => Ok(s.clone()),
        _ => Err(alloc::format!("{key}: \"{name}\" missing or not a string")),
    };
    ValenceTopic::new(text("topic")?, text("valence")?).map_err(|e| alloc::format!("{key}: {e}"))
}

/// Parses `{"event_a": {"topic", "valence"}, "event_b": {...}}`.
pub fn parse_label_response(text: &str) -> core::result::Result<NarrativeLabels, String> {
    let value: Value = serde_json::from_str(text.trim()).map_err(|e| alloc::format!("not JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("expected a JSON object".to_string());
    };
    Ok(NarrativeLabels {
        a: side(&obj, "event_a")?,
        b: side(&obj, "event_b")?,
    })
}

/// Sends the labeling prompt. Service failures are errors; an unusable
/// answer leaves the narrative unlabeled.
pub fn label_narrative<B: ChatBackend + ?Sized>(backend: &B, bundle: &PromptBundle) -> Result<LabelOutcome> {
    let response = backend.complete(&bundle.to_request())?;
    Ok(match parse_label_response(&response) {
        Ok(labels) => LabelOutcome::Labeled(labels),
        Err(reason) => {
            log::warn!("labeling response unusable: {reason}");
            LabelOutcome::Unlabeled { reason }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_sides() {
        let l = parse_label_response(
            r#"{"event_a": {"topic": "monetary policy", "valence": "loose"},
                "Event B": {"topic": "inflation risks", "valence": "rising"}}"#,
        )
        .unwrap();
        assert_eq!(l.a, ValenceTopic::new("monetary policy", "loose").unwrap());
        assert_eq!(l.b.topic, "inflation risks");
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "not json",
            "[]",
            r#"{"event_a": {"topic": "x", "valence": "up"}}"#,
            r#"{"event_a": {"topic": "", "valence": "up"}, "event_b": {"topic": "y", "valence": "up"}}"#,
            r#"{"event_a": {"topic": "x", "valence": 1}, "event_b": {"topic": "y", "valence": "up"}}"#,
        ] {
            assert!(parse_label_response(bad).is_err(), "{bad}");
        }
    }
}
