//! Parsing of staged chain-of-thought extraction responses.
//!
//! The model answers with one JSON record per narrative:
//!
//! ```json
//! {"Focused Excerpt": "...", "Sequence of interest": "...",
//!  "Causal Restatement": {"Event A": "...", "causal connector": "causes", "Event B": "..."},
//!  "Coreference Resolution": {...}, "Event Rephrasing": {...}}
//! ```
//!
//! Records may arrive as a bare array, wrapped in an object under any single
//! key (JSON mode forces an object at the top level), or as one bare record.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::narrative::{Connector, CotTrace, EventPair, RawNarrative, Source, Span};

const FOCUSED_EXCERPT: &str = "focused excerpt";
const SEQUENCE: &str = "sequence of interest";
const RESTATEMENT: &str = "causal restatement";
const COREFERENCE: &str = "coreference resolution";
const REPHRASING: &str = "event rephrasing";
const EVENT_A: &str = "event a";
const CONNECTOR: &str = "causal connector";
const EVENT_B: &str = "event b";

const RECORD_KEYS: [&str; 5] = [FOCUSED_EXCERPT, SEQUENCE, RESTATEMENT, COREFERENCE, REPHRASING];
const PAIR_KEYS: [&str; 3] = [EVENT_A, CONNECTOR, EVENT_B];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Drop malformed records and keep going.
    #[default]
    Lenient,
    /// Fail on the first malformed record.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Zero-based record index within the response.
    pub record: usize,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CotParse {
    pub traces: Vec<CotTrace>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CotParse {
    pub fn rejected(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Rejected).count()
    }
}

/// Lowercases and folds `_`, `-` and whitespace runs to single spaces.
fn normalize_key(key: &str) -> String {
    key.split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn lookup<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.iter().find(|(k, _)| normalize_key(k) == key).map(|(_, v)| v)
}

fn is_record(obj: &Map<String, Value>) -> bool {
    obj.keys().any(|k| RECORD_KEYS.contains(&normalize_key(k).as_str()))
}

fn records_of(value: &Value) -> Result<Vec<&Value>> {
    match value {
        Value::Array(items) => Ok(items.iter().collect()),
        Value::Object(obj) if obj.is_empty() => Ok(Vec::new()),
        Value::Object(obj) if is_record(obj) => Ok(alloc::vec![value]),
        Value::Object(obj) => {
            let arrays: Vec<&Vec<Value>> = obj.values().filter_map(Value::as_array).collect();
            match arrays.as_slice() {
                [one] => Ok(one.iter().collect()),
                [] => Err(Error::UnexpectedShape("object holds neither records nor a record list".to_string())),
                _ => Err(Error::UnexpectedShape("object holds more than one list".to_string())),
            }
        }
        _ => Err(Error::UnexpectedShape("top level must be a list or an object".to_string())),
    }
}

struct RecordParser<'d> {
    index: usize,
    diagnostics: &'d mut Vec<Diagnostic>,
}

impl RecordParser<'_> {
    fn warn(&mut self, message: String) {
        self.diagnostics.push(Diagnostic {
            record: self.index,
            severity: Severity::Warning,
            message,
        });
    }

    fn text_field(&mut self, obj: &Map<String, Value>, key: &str) -> core::result::Result<String, String> {
        match lookup(obj, key) {
            Some(Value::String(s)) => Ok(s.clone()),
            None | Some(Value::Null) => {
                self.warn(alloc::format!("missing \"{key}\""));
                Ok(String::new())
            }
            Some(_) => Err(alloc::format!("\"{key}\" is not a string")),
        }
    }

    fn pair(&mut self, stage: &str, value: &Value) -> core::result::Result<EventPair, String> {
        let Value::Object(obj) = value else {
            return Err(alloc::format!("{stage} is not an object"));
        };
        for k in obj.keys() {
            if !PAIR_KEYS.contains(&normalize_key(k).as_str()) {
                self.warn(alloc::format!("ignored key {k:?} in {stage}"));
            }
        }
        let event = |key: &str| match lookup(obj, key) {
            Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
            Some(Value::String(_)) => Err(alloc::format!("{stage}: empty \"{key}\"")),
            Some(_) => Err(alloc::format!("{stage}: \"{key}\" is not a string")),
            None => Err(alloc::format!("{stage}: missing \"{key}\"")),
        };
        let event_a = event(EVENT_A)?;
        let event_b = event(EVENT_B)?;
        let connector = match lookup(obj, CONNECTOR) {
            Some(Value::String(s)) => {
                Connector::parse(s).ok_or_else(|| alloc::format!("{stage}: unknown causal connector {s:?}"))?
            }
            Some(_) => return Err(alloc::format!("{stage}: causal connector is not a string")),
            None => return Err(alloc::format!("{stage}: missing causal connector")),
        };
        Ok(EventPair {
            event_a,
            connector,
            event_b,
        })
    }

    fn optional_stage(
        &mut self,
        obj: &Map<String, Value>,
        key: &str,
        previous: &EventPair,
    ) -> core::result::Result<Option<EventPair>, String> {
        let value = match lookup(obj, key) {
            None | Some(Value::Null) => return Ok(None),
            Some(Value::String(s)) if s.trim().is_empty() => return Ok(None),
            Some(v) => v,
        };
        let pair = self.pair(key, value)?;
        if pair.connector != previous.connector {
            return Err(alloc::format!(
                "{key} changes the connector from {:?} to {:?}",
                previous.connector.wire(),
                pair.connector.wire()
            ));
        }
        Ok(Some(pair))
    }

    fn record(&mut self, value: &Value) -> core::result::Result<CotTrace, String> {
        let Value::Object(obj) = value else {
            return Err("record is not an object".to_string());
        };
        for k in obj.keys() {
            if !RECORD_KEYS.contains(&normalize_key(k).as_str()) {
                self.warn(alloc::format!("ignored key {k:?}"));
            }
        }
        let restatement = match lookup(obj, RESTATEMENT) {
            None | Some(Value::Null) => return Err("missing causal restatement".to_string()),
            Some(v) => self.pair(RESTATEMENT, v)?,
        };
        let focused_excerpt = self.text_field(obj, FOCUSED_EXCERPT)?;
        let sequence_of_interest = self.text_field(obj, SEQUENCE)?;
        let coreference_resolution = self.optional_stage(obj, COREFERENCE, &restatement)?;
        let prior = coreference_resolution.as_ref().unwrap_or(&restatement).clone();
        let event_rephrasing = self.optional_stage(obj, REPHRASING, &prior)?;
        Ok(CotTrace {
            focused_excerpt,
            sequence_of_interest,
            causal_restatement: restatement,
            coreference_resolution,
            event_rephrasing,
        })
    }
}

/// Parses a full model response into traces, in response order.
///
/// Text that is not JSON, or JSON of an unrecognised shape, is an error in
/// both modes. In lenient mode malformed records are skipped and reported
/// as [`Severity::Rejected`] diagnostics; in strict mode the first one is
/// returned as [`Error::RejectedRecord`].
pub fn parse_cot_response(text: &str, mode: ParseMode) -> Result<CotParse> {
    let value: Value = serde_json::from_str(text.trim()).map_err(|e| Error::NotJson(e.to_string()))?;
    let records = records_of(&value)?;
    let mut out = CotParse::default();
    for (index, record) in records.into_iter().enumerate() {
        let mut parser = RecordParser {
            index,
            diagnostics: &mut out.diagnostics,
        };
        match parser.record(record) {
            Ok(trace) => out.traces.push(trace),
            Err(message) if mode == ParseMode::Strict => {
                return Err(Error::RejectedRecord { record: index, message });
            }
            Err(message) => {
                log::warn!("dropping extraction record {index}: {message}");
                out.diagnostics.push(Diagnostic {
                    record: index,
                    severity: Severity::Rejected,
                    message,
                });
            }
        }
    }
    Ok(out)
}

/// Where a finalized narrative came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub id: String,
    pub doc_id: String,
    pub excerpt_span: Option<Span>,
    pub source: Source,
}

/// Turns a trace into a narrative whose pair is the trace's last stage.
pub fn finalize_narrative(trace: CotTrace, provenance: Provenance) -> RawNarrative {
    RawNarrative {
        id: provenance.id,
        doc_id: provenance.doc_id,
        excerpt_span: provenance.excerpt_span,
        pair: trace.final_pair().clone(),
        trace: Some(trace),
        inflation_scope: true,
        source: provenance.source,
        markup: None,
        derived_from: None,
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn render_pair(out: &mut String, label: &str, pair: &EventPair) {
    out.push_str(&alloc::format!(
        "  \"{label}\": {{\n    \"Event A\": {},\n    \"causal connector\": \"{}\",\n    \"Event B\": {}\n  }}",
        json_str(&pair.event_a),
        pair.connector.wire(),
        json_str(&pair.event_b)
    ));
}

/// Renders a trace as a JSON object with the stage keys in extraction
/// order. Absent optional stages repeat the previous stage, so every
/// rendering shows all five steps.
pub fn render_trace(trace: &CotTrace) -> String {
    let coref = trace.coreference_resolution.as_ref().unwrap_or(&trace.causal_restatement);
    let rephrased = trace.event_rephrasing.as_ref().unwrap_or(coref);
    let mut out = String::from("{\n");
    out.push_str(&alloc::format!("  \"Focused Excerpt\": {},\n", json_str(&trace.focused_excerpt)));
    out.push_str(&alloc::format!("  \"Sequence of interest\": {},\n", json_str(&trace.sequence_of_interest)));
    render_pair(&mut out, "Causal Restatement", &trace.causal_restatement);
    out.push_str(",\n");
    render_pair(&mut out, "Coreference Resolution", coref);
    out.push_str(",\n");
    render_pair(&mut out, "Event Rephrasing", rephrased);
    out.push_str("\n}");
    out
}

/// Renders traces as the `{"narratives": [...]}` object the extraction
/// prompt asks for.
pub fn render_traces(traces: &[CotTrace]) -> String {
    let body: Vec<String> = traces.iter().map(render_trace).collect();
    alloc::format!("{{\"narratives\": [\n{}\n]}}", body.join(",\n"))
}
