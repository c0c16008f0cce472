//! Blocking client for chat-completion and embedding endpoints.

use std::time::Duration;

use narrex_core::gateway::{ChatRequest, ResponseFormat, ServiceError};
use serde_json::{json, Value};

pub const API_KEY_VAR: &str = "NARRATIVE_API_KEY";
pub const BASE_URL_VAR: &str = "NARRATIVE_API_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub base_url: String,
    pub api_key: String,
    pub timeout: Duration,
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// First backoff delay; doubles on every retry.
    pub backoff: Duration,
}

impl HttpSettings {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpSettings {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            timeout: Duration::from_secs(120),
            max_retries: 3,
            backoff: Duration::from_millis(500),
        }
    }

    /// Reads the key and optional base URL from the environment.
    pub fn from_env() -> Result<Self, ServiceError> {
        let key = std::env::var(API_KEY_VAR)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ServiceError::InvalidRequest(format!("{API_KEY_VAR} is not set")))?;
        let base = std::env::var(BASE_URL_VAR)
            .ok()
            .filter(|b| !b.trim().is_empty())
            .unwrap_or_else(|| DEFAULT_BASE_URL.to_string());
        Ok(HttpSettings::new(base, key))
    }
}

pub struct HttpClient {
    agent: ureq::Agent,
    settings: HttpSettings,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(ServiceError),
}

impl HttpClient {
    pub fn new(settings: HttpSettings) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(settings.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient { agent, settings }
    }

    fn attempt(&self, url: &str, body: &str) -> Attempt {
        let sent = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {}", self.settings.api_key))
            .header("Content-Type", "application/json")
            .send(body);
        let mut response = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}")),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        match status {
            200..=299 => Attempt::Done(text),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => {
                let snippet: String = text.chars().take(300).collect();
                Attempt::Fail(ServiceError::Upstream(format!("HTTP {status}: {snippet}")))
            }
        }
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, ServiceError> {
        let url = format!("{}/{path}", self.settings.base_url);
        let body = body.to_string();
        let mut delay = self.settings.backoff;
        let mut last = String::new();
        for attempt in 0..=self.settings.max_retries {
            if attempt > 0 {
                log::warn!("{url}: {last}; retry {attempt} in {delay:?}");
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&url, &body) {
                Attempt::Done(text) => {
                    return serde_json::from_str(&text)
                        .map_err(|e| ServiceError::MalformedResponse(format!("{url}: body is not JSON: {e}")))
                }
                Attempt::Retry(reason) => last = reason,
                Attempt::Fail(e) => return Err(e),
            }
        }
        Err(ServiceError::Upstream(format!(
            "{url}: giving up after {} attempts: {last}",
            self.settings.max_retries + 1
        )))
    }

    pub fn chat(&self, req: &ChatRequest) -> Result<String, ServiceError> {
        let mut body = json!({
            "model": req.model_id,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if req.response_format == ResponseFormat::Json {
            body["response_format"] = json!({"type": "json_object"});
        }
        let value = self.post("chat/completions", &body)?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ServiceError::MalformedResponse("no choices[0].message.content".to_string()))
    }

    pub fn embed(&self, model_id: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
        let value = self.post("embeddings", &json!({"model": model_id, "input": texts}))?;
        let data = value
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| ServiceError::MalformedResponse("no data array".to_string()))?;
        let mut rows: Vec<(u64, Vec<f64>)> = Vec::with_capacity(data.len());
        for (i, item) in data.iter().enumerate() {
            let index = item.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
            let vector = item
                .get("embedding")
                .and_then(Value::as_array)
                .and_then(|xs| xs.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                .ok_or_else(|| ServiceError::MalformedResponse(format!("data[{i}].embedding is not numeric")))?;
            rows.push((index, vector));
        }
        rows.sort_by_key(|(i, _)| *i);
        Ok(rows.into_iter().map(|(_, v)| v).collect())
    }
}
