//! Shared test support: a keyword embedder with meaningful similarities and
//! a local HTTP server that imitates the chat and embedding endpoints.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use narrex::gateway::CacheMode;
use narrex::http::HttpSettings;
use narrex::{ConfigOverrides, RunConfig};
use narrex_core::gateway::{Embedder, ServiceError};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The figure-excerpt configuration with the run and cache directories
/// moved elsewhere.
pub fn figures_config(run_dir: &Path, cache_dir: Option<&Path>, mode: CacheMode) -> RunConfig {
    let overrides = ConfigOverrides {
        run_dir: Some(run_dir.to_path_buf()),
        cache_dir: cache_dir.map(Path::to_path_buf),
        cache_mode: Some(mode),
        ..ConfigOverrides::default()
    };
    RunConfig::load(&fixtures().join("figures.toml"), &overrides).expect("figures.toml loads")
}

/// Settings pointing at a mock server, with retries that do not sleep long.
pub fn mock_http(server: &MockServer) -> HttpSettings {
    let mut settings = HttpSettings::new(server.base_url.clone(), "test-key");
    settings.backoff = Duration::from_millis(1);
    settings.timeout = Duration::from_secs(10);
    settings
}

/// Concept axes and the words or phrases that load on them.
const AXES: &[&[&str]] = &[
    &["inflation", "inflationary", "cpi", "cost of living", "consumer prices", "price increases", "price pressures"],
    &["expectation", "expectations", "expected"],
    &["monetary", "fed", "federal reserve", "central bank"],
    &["interest", "rates", "borrowing costs", "yields"],
    &["economy", "economic activity", "economic conditions"],
    &["energy", "oil", "gas", "gasoline", "electricity", "fuel"],
    &["stock", "stocks", "equities", "shares"],
    &["bond", "bonds", "treasury"],
    &["consumer spending", "consumer demand", "household spending"],
    &["government", "public spending", "fiscal"],
    &["wage", "wages", "labor costs"],
    &["growth", "gdp", "expansion"],
    &["debt", "debts"],
];

const NOISE_DIMS: usize = 8;

/// Embeds text as keyword hits per concept axis plus a small digest-seeded
/// component, so related phrases land close together and no two distinct
/// texts coincide.
pub fn concept_vector(text: &str) -> Vec<f64> {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
    let padded = format!(" {} ", words.join(" "));
    let mut v: Vec<f64> = AXES
        .iter()
        .map(|keys| {
            keys.iter()
                .filter(|k| if k.contains(' ') { padded.contains(&format!(" {k} ")) } else { words.contains(k) })
                .count() as f64
        })
        .collect();
    let digest = Sha256::digest(text.as_bytes());
    v.extend(digest.iter().take(NOISE_DIMS).map(|&b| (b as f64 / 255.0 - 0.5) * 0.2));
    v
}

pub struct ConceptEmbedder;

impl Embedder for ConceptEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
        if texts.is_empty() {
            return Err(ServiceError::InvalidRequest("no texts".into()));
        }
        Ok(texts.iter().map(|t| concept_vector(t)).collect())
    }
}

fn pair(a: &str, connector: &str, b: &str) -> Value {
    json!({"Event A": a, "causal connector": connector, "Event B": b})
}

/// Canned extraction answers keyed by a phrase of the excerpt.
fn extraction(excerpt: &str) -> Value {
    let records = if excerpt.contains("aggressiveness") {
        let ex = "Some private economists -- and a few inside the Fed -- say the Fed's aggressiveness is increasing the risks of an outbreak of inflation.";
        vec![json!({
            "Focused Excerpt": ex,
            "Sequence of interest": "the Fed's aggressiveness is increasing the risks of an outbreak of inflation",
            "Causal Restatement": pair("the Fed's aggressiveness", "causes", "increasing the risks of an outbreak of inflation"),
            "Coreference Resolution": pair("the Federal Reserve's aggressiveness", "causes", "increasing the risks of an outbreak of inflation"),
            "Event Rephrasing": pair("the Federal Reserve's aggressiveness", "causes", "higher risks of an outbreak of inflation"),
        })]
    } else if excerpt.contains("stringent path") {
        vec![json!({
            "Focused Excerpt": "It has raised short-term rates, hoping to ease inflationary pressures",
            "Sequence of interest": "It has raised short-term rates, hoping to ease inflationary pressures",
            "Causal Restatement": pair("It has raised short-term rates", "causes", "ease inflationary pressures"),
            "Coreference Resolution": pair("The Fed has raised short-term rates", "causes", "ease inflationary pressures"),
            "Event Rephrasing": pair("The Fed raising short-term rates", "causes", "easing inflationary pressures"),
        })]
    } else if excerpt.contains("service debts") {
        vec![json!({
            "Focused Excerpt": excerpt,
            "Sequence of interest": "inflation weakening too much. When that happens, households, businesses and governments find it harder to service debts",
            "Causal Restatement": pair("inflation weakening too much", "causes", "households, businesses and governments find it harder to service debts"),
            "Coreference Resolution": pair("inflation weakening too much", "causes", "households, businesses and governments find it harder to service debts"),
            "Event Rephrasing": pair("Inflation weakening too much", "causes", "Households, businesses and governments find it harder to service debts"),
        })]
    } else {
        vec![]
    };
    json!({ "narratives": records })
}

fn decomposition(event: &str) -> Value {
    if event.contains("Households, businesses and governments") {
        json!({"events": [
            "It becomes harder for households to service debts",
            "It becomes harder for businesses to service debts",
            "It becomes harder for governments to service debts",
        ]})
    } else {
        json!({ "events": [event] })
    }
}

fn vt(topic: &str, valence: &str) -> Value {
    json!({"topic": topic, "valence": valence})
}

fn labeling(tail: &str) -> Value {
    let (a, b) = if tail.contains("aggressiveness") {
        (vt("monetary policy", "loose"), vt("inflation risks", "rising"))
    } else if tail.contains("short-term rates") {
        (vt("monetary policy", "tight"), vt("inflationary pressures", "falling"))
    } else if tail.contains("Inflation weakening") {
        let who = ["households", "businesses", "governments"]
            .into_iter()
            .find(|w| tail.contains(w))
            .unwrap_or("borrowers");
        (vt("inflation", "falling"), vt(&format!("{who} debt burden"), "rising"))
    } else {
        (vt("economy", "unknown"), vt("economy", "unknown"))
    };
    json!({"event_a": a, "event_b": b})
}

fn json_tail(prompt: &str, marker: &str) -> String {
    let tail = prompt.rsplit(marker).next().unwrap_or("");
    let first_line = tail.lines().next().unwrap_or("");
    serde_json::from_str::<String>(first_line).unwrap_or_else(|_| first_line.to_string())
}

/// The answer text for a chat prompt.
pub fn chat_answer(prompt: &str) -> String {
    let value = if prompt.starts_with("# Codebook:") {
        extraction(&json_tail(prompt, "## Excerpt:\n"))
    } else if prompt.starts_with("You split compound events") {
        decomposition(&json_tail(prompt, "\nEvent: "))
    } else if prompt.starts_with("You label the two events") {
        let tail = prompt.rsplit("\nEvent A: ").next().unwrap_or("");
        labeling(tail)
    } else {
        json!({"error": "unrecognized prompt"})
    };
    value.to_string()
}

fn route(path: &str, body: &Value) -> (u16, Value) {
    match path {
        "/v1/chat/completions" => {
            let prompt = body.pointer("/messages/0/content").and_then(Value::as_str).unwrap_or("");
            (200, json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": chat_answer(prompt)}}]}))
        }
        "/v1/embeddings" => {
            let inputs: Vec<String> = body
                .get("input")
                .and_then(Value::as_array)
                .map(|xs| xs.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
                .unwrap_or_default();
            // Reverse order on the wire; clients must sort by index.
            let data: Vec<Value> = inputs
                .iter()
                .enumerate()
                .rev()
                .map(|(i, t)| json!({"index": i, "embedding": concept_vector(t)}))
                .collect();
            (200, json!({ "data": data }))
        }
        _ => (404, json!({"error": "no such endpoint"})),
    }
}

/// A local stand-in for the model service. `fail_first` requests are
/// answered with `fail_status` before normal service starts.
pub struct MockServer {
    pub base_url: String,
    pub requests: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, Value)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).ok()?;
    Some((path, serde_json::from_slice(&body).unwrap_or(Value::Null)))
}

impl MockServer {
    pub fn start() -> Self {
        Self::start_flaky(0, 200)
    }

    pub fn start_flaky(fail_first: usize, fail_status: u16) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&requests);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let counter = Arc::clone(&counter);
                std::thread::spawn(move || {
                    let Some((path, body)) = read_request(&mut stream) else { return };
                    let n = counter.fetch_add(1, Ordering::SeqCst);
                    let (status, value) = if n < fail_first {
                        (fail_status, json!({"error": "try again"}))
                    } else {
                        route(&path, &body)
                    };
                    let text = value.to_string();
                    let reply = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                        text.len()
                    );
                    let _ = stream.write_all(reply.as_bytes());
                });
            }
        });
        MockServer {
            base_url: format!("http://{addr}/v1"),
            requests,
        }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}
