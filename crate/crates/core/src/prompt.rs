//! Prompt templates and the three prompts the pipeline sends: narrative
//! extraction, event decomposition and valence/topic labeling.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Excerpt;
use crate::cot::render_traces;
use crate::error::{Error, Result};
use crate::gateway::{
    sha256_hex, ChatRequest, ResponseFormat, DEFAULT_AUXILIARY_MODEL, DEFAULT_EXTRACTION_MODEL, DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
};
use crate::label::ValenceTopic;
use crate::narrative::{CotTrace, RawNarrative};

/// Number of worked examples in the default extraction prompt.
pub const DEFAULT_SHOT_COUNT: usize = 7;

/// A prompt template with `{{name}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    text: String,
    hash: String,
}

impl Template {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let hash = sha256_hex(text.as_bytes());
        Template {
            name: name.into(),
            text,
            hash,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Hex SHA-256 of the template text.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        let mut rest = self.text.as_str();
        while let Some((name, after)) = next_placeholder(rest) {
            if let Some(name) = name {
                if !names.iter().any(|n| n == name) {
                    names.push(name.to_string());
                }
            }
            rest = after;
        }
        names
    }

    fn require(&self, names: &[&str]) -> Result<()> {
        let present = self.placeholders();
        for name in names {
            if !present.iter().any(|p| p == name) {
                return Err(Error::invalid(
                    "template",
                    alloc::format!("{} has no {{{{{name}}}}} placeholder", self.name),
                ));
            }
        }
        Ok(())
    }

    /// Substitutes every placeholder in one pass; substituted text is not
    /// scanned again.
    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<String> {
        let mut out = String::with_capacity(self.text.len());
        let mut rest = self.text.as_str();
        loop {
            let Some(open) = rest.find("{{") else {
                out.push_str(rest);
                return Ok(out);
            };
            out.push_str(&rest[..open]);
            let Some((name, after)) = next_placeholder(&rest[open..]) else {
                out.push_str(&rest[open..]);
                return Ok(out);
            };
            match name {
                Some(name) => {
                    let value = values.get(name).ok_or_else(|| Error::MissingPlaceholder(name.to_string()))?;
                    out.push_str(value);
                }
                None => out.push_str(&rest[open..rest.len() - after.len()]),
            }
            rest = after;
        }
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Finds the next `{{...}}` and returns its name (None if the braces do not
/// enclose a valid name) and the text after it.
fn next_placeholder(s: &str) -> Option<(Option<&str>, &str)> {
    let open = s.find("{{")?;
    let inner = &s[open + 2..];
    match inner.find("}}") {
        Some(close) => {
            let name = inner[..close].trim();
            Some((is_name(name).then_some(name), &inner[close + 2..]))
        }
        None => None,
    }
}

/// A worked extraction example: an excerpt and the traces it should yield.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShot {
    pub id: String,
    pub excerpt: String,
    pub traces: Vec<CotTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionShot {
    pub event: String,
    pub atoms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelShot {
    pub event_a: String,
    pub event_b: String,
    pub a: ValenceTopic,
    pub b: ValenceTopic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ModelSettings {
    pub fn extraction() -> Self {
        ModelSettings {
            model_id: DEFAULT_EXTRACTION_MODEL.to_string(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    /// Defaults for decomposition and labeling.
    pub fn auxiliary() -> Self {
        ModelSettings {
            model_id: DEFAULT_AUXILIARY_MODEL.to_string(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: 1024,
        }
    }
}

/// A rendered prompt together with the request settings it is sent with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    pub response_format: ResponseFormat,
    pub temperature: f64,
    pub model_id: String,
    pub max_tokens: u32,
    pub template_hash: String,
}

impl PromptBundle {
    fn new(text: String, template: &Template, settings: &ModelSettings) -> Self {
        PromptBundle {
            text,
            response_format: ResponseFormat::Json,
            temperature: settings.temperature,
            model_id: settings.model_id.clone(),
            max_tokens: settings.max_tokens,
            template_hash: template.hash().to_string(),
        }
    }

    pub fn to_request(&self) -> ChatRequest {
        ChatRequest {
            model_id: self.model_id.clone(),
            prompt: self.text.clone(),
            temperature: self.temperature,
            response_format: self.response_format,
            max_tokens: self.max_tokens,
            template_hash: self.template_hash.clone(),
        }
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// The worked-example block: each excerpt followed by its rendered traces.
pub fn render_shots(shots: &[FewShot]) -> String {
    shots
        .iter()
        .map(|s| alloc::format!("## Excerpt:\n{}\n{}", json_str(&s.excerpt), render_traces(&s.traces)))
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn assemble_extraction_prompt(
    template: &Template,
    excerpt: &Excerpt,
    shots: &[FewShot],
    settings: &ModelSettings,
) -> Result<PromptBundle> {
    let text = excerpt.text();
    if text.trim().is_empty() {
        return Err(Error::EmptyInput("excerpt"));
    }
    if shots.is_empty() {
        return Err(Error::EmptyInput("few-shot examples"));
    }
    template.require(&["excerpt", "shots"])?;
    let mut values = BTreeMap::new();
    values.insert("excerpt", json_str(&text));
    values.insert("shots", render_shots(shots));
    Ok(PromptBundle::new(template.render(&values)?, template, settings))
}

pub fn render_decomposition_shots(shots: &[DecompositionShot]) -> String {
    shots
        .iter()
        .map(|s| {
            let atoms: Vec<String> = s.atoms.iter().map(|a| json_str(a)).collect();
            alloc::format!("Event: {}\nOutput: {{\"events\": [{}]}}", json_str(&s.event), atoms.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn assemble_decomposition_prompt(
    template: &Template,
    event: &str,
    shots: &[DecompositionShot],
    settings: &ModelSettings,
) -> Result<PromptBundle> {
    if event.trim().is_empty() {
        return Err(Error::EmptyInput("event"));
    }
    template.require(&["event", "shots"])?;
    let mut values = BTreeMap::new();
    values.insert("event", json_str(event));
    values.insert("shots", render_decomposition_shots(shots));
    Ok(PromptBundle::new(template.render(&values)?, template, settings))
}

fn label_json(a: &ValenceTopic, b: &ValenceTopic) -> String {
    alloc::format!(
        "{{\"event_a\": {{\"topic\": {}, \"valence\": {}}}, \"event_b\": {{\"topic\": {}, \"valence\": {}}}}}",
        json_str(&a.topic),
        json_str(&a.valence),
        json_str(&b.topic),
        json_str(&b.valence)
    )
}

pub fn render_label_shots(shots: &[LabelShot]) -> String {
    shots
        .iter()
        .map(|s| {
            alloc::format!(
                "Event A: {}\nEvent B: {}\nOutput: {}",
                json_str(&s.event_a),
                json_str(&s.event_b),
                label_json(&s.a, &s.b)
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn assemble_valence_topic_prompt(
    template: &Template,
    narrative: &RawNarrative,
    shots: &[LabelShot],
    settings: &ModelSettings,
) -> Result<PromptBundle> {
    let pair = &narrative.pair;
    if pair.event_a.trim().is_empty() {
        return Err(Error::EmptyInput("event A"));
    }
    if pair.event_b.trim().is_empty() {
        return Err(Error::EmptyInput("event B"));
    }
    template.require(&["event_a", "event_b", "shots"])?;
    let mut values = BTreeMap::new();
    values.insert("event_a", json_str(&pair.event_a));
    values.insert("event_b", json_str(&pair.event_b));
    values.insert("shots", render_label_shots(shots));
    Ok(PromptBundle::new(template.render(&values)?, template, settings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::narrative::{Connector, EventPair, Source, Span};
    use alloc::vec;

    fn excerpt(text: &str) -> Excerpt {
        Excerpt {
            doc_id: "d".into(),
            span: Span { start: 0, end: 0 },
            sentences: vec![text.into()],
            match_index: 0,
        }
    }

    fn shot() -> FewShot {
        FewShot {
            id: "s1".into(),
            excerpt: "Rates rose, so inflation eased.".into(),
            traces: vec![CotTrace {
                focused_excerpt: "Rates rose, so inflation eased.".into(),
                sequence_of_interest: "Rates rose, so inflation eased".into(),
                causal_restatement: EventPair::new("Rates rose", Connector::Causes, "inflation eased").unwrap(),
                coreference_resolution: None,
                event_rephrasing: None,
            }],
        }
    }

    fn narrative(a: &str, b: &str) -> RawNarrative {
        RawNarrative {
            id: "n".into(),
            doc_id: "d".into(),
            excerpt_span: None,
            pair: EventPair {
                event_a: a.into(),
                connector: Connector::Causes,
                event_b: b.into(),
            },
            trace: None,
            inflation_scope: true,
            source: Source::Model,
            markup: None,
            derived_from: None,
        }
    }

    #[test]
    fn render_is_single_pass() {
        let t = Template::new("t", "A {{x}} B {{ y }} C {{not a name}} D {{");
        let mut values = BTreeMap::new();
        values.insert("x", "{{y}}".to_string());
        values.insert("y", "why".to_string());
        assert_eq!(t.render(&values).unwrap(), "A {{y}} B why C {{not a name}} D {{");
        assert_eq!(t.placeholders(), vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn missing_value_is_error() {
        let t = Template::new("t", "{{a}}");
        assert_eq!(t.render(&BTreeMap::new()), Err(Error::MissingPlaceholder("a".into())));
    }

    #[test]
    fn hash_tracks_text() {
        assert_eq!(Template::new("a", "x").hash(), Template::new("b", "x").hash());
        assert_ne!(Template::new("a", "x").hash(), Template::new("a", "y").hash());
    }

    #[test]
    fn extraction_prompt() {
        let t = Template::new("extract", "Rules\n# Example\n{{shots}}\n# Your Work\n## Excerpt:\n{{excerpt}}\n");
        let settings = ModelSettings::extraction();
        let p = assemble_extraction_prompt(&t, &excerpt("Prices rose."), &[shot()], &settings).unwrap();
        assert!(p.text.ends_with("## Excerpt:\n\"Prices rose.\"\n"));
        assert!(p.text.find("Rates rose").unwrap() < p.text.find("Prices rose.").unwrap());
        assert_eq!(p.response_format, ResponseFormat::Json);
        assert_eq!(p.temperature, 0.2);
        assert_eq!(p.model_id, "gpt-4o-2024-11-20");
        assert_eq!(p.template_hash, t.hash());
        let again = assemble_extraction_prompt(&t, &excerpt("Prices rose."), &[shot()], &settings).unwrap();
        assert_eq!(p, again);
        assert_eq!(p.to_request().prompt, p.text);
    }

    #[test]
    fn extraction_preconditions() {
        let t = Template::new("extract", "{{shots}} {{excerpt}}");
        let s = ModelSettings::extraction();
        assert_eq!(
            assemble_extraction_prompt(&t, &excerpt("x"), &[], &s),
            Err(Error::EmptyInput("few-shot examples"))
        );
        assert_eq!(
            assemble_extraction_prompt(&t, &excerpt("  "), &[shot()], &s),
            Err(Error::EmptyInput("excerpt"))
        );
        let no_slot = Template::new("extract", "{{excerpt}}");
        assert!(assemble_extraction_prompt(&no_slot, &excerpt("x"), &[shot()], &s).is_err());
    }

    #[test]
    fn decomposition_prompt() {
        let t = Template::new("decompose", "{{shots}}\nEvent: {{event}}");
        let shots = vec![DecompositionShot {
            event: "wages and rents rose".into(),
            atoms: vec!["wages rose".into(), "rents rose".into()],
        }];
        let s = ModelSettings::auxiliary();
        let p = assemble_decomposition_prompt(&t, "Energy and food prices are on the rise", &shots, &s).unwrap();
        assert!(p.text.contains("\"Energy and food prices are on the rise\""));
        assert!(p.text.contains("{\"events\": [\"wages rose\", \"rents rose\"]}"));
        assert_eq!(p.model_id, "gpt-4o-mini");
        assert_eq!(p, assemble_decomposition_prompt(&t, "Energy and food prices are on the rise", &shots, &s).unwrap());
        assert!(assemble_decomposition_prompt(&t, "inflation is rising", &shots, &s).is_ok());
        assert_eq!(assemble_decomposition_prompt(&t, " ", &shots, &s), Err(Error::EmptyInput("event")));
    }

    #[test]
    fn valence_prompt() {
        let t = Template::new("label", "{{shots}}\nA: {{event_a}}\nB: {{event_b}}");
        let s = ModelSettings::auxiliary();
        let n = narrative("the Federal Reserve's aggressiveness", "higher risks of an outbreak of inflation");
        let p = assemble_valence_topic_prompt(&t, &n, &[], &s).unwrap();
        assert!(p.text.contains("\"the Federal Reserve's aggressiveness\""));
        assert!(p.text.contains("\"higher risks of an outbreak of inflation\""));
        assert_eq!(p, assemble_valence_topic_prompt(&t, &n, &[], &s).unwrap());
        let empty = narrative("x", "");
        assert_eq!(assemble_valence_topic_prompt(&t, &empty, &[], &s), Err(Error::EmptyInput("event B")));
    }
}
