//! Request types and service traits for chat-completion and embedding
//! providers, plus the content digest used to key the response cache.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_EXTRACTION_MODEL: &str = "gpt-4o-2024-11-20";
pub const DEFAULT_AUXILIARY_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_MAX_TOKENS: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("no recorded fixture for request {key}")]
    MissingFixture { key: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("upstream service failed: {0}")]
    Upstream(String),
    #[error("malformed service response: {0}")]
    MalformedResponse(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("response cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseFormat {
    Json,
    Free,
}

impl ResponseFormat {
    fn tag(self) -> &'static str {
        match self {
            ResponseFormat::Json => "json",
            ResponseFormat::Free => "free",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub prompt: String,
    pub temperature: f64,
    pub response_format: ResponseFormat,
    pub max_tokens: u32,
    /// Digest of the template the prompt was rendered from.
    pub template_hash: String,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return Err(ServiceError::InvalidRequest(alloc::format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.model_id.trim().is_empty() {
            return Err(ServiceError::InvalidRequest("empty model id".to_string()));
        }
        if self.prompt.is_empty() {
            return Err(ServiceError::InvalidRequest("empty prompt".to_string()));
        }
        if self.max_tokens == 0 {
            return Err(ServiceError::InvalidRequest("max_tokens must be positive".to_string()));
        }
        Ok(())
    }
}

struct KeyHasher(Sha256);

impl KeyHasher {
    fn new(domain: &str) -> Self {
        let mut h = KeyHasher(Sha256::new());
        h.field(b'd', domain.as_bytes());
        h
    }

    // Every field is tagged and length-prefixed so no two field sequences
    // share an encoding.
    fn field(&mut self, tag: u8, bytes: &[u8]) {
        self.0.update([tag]);
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

/// Hex SHA-256 digest of every request field.
pub fn cache_key(req: &ChatRequest) -> String {
    let mut h = KeyHasher::new("narrex/chat/v1");
    h.field(b'm', req.model_id.as_bytes());
    h.field(b'p', req.prompt.as_bytes());
    h.field(b't', &req.temperature.to_bits().to_le_bytes());
    h.field(b'f', req.response_format.tag().as_bytes());
    h.field(b'x', &req.max_tokens.to_le_bytes());
    h.field(b'h', req.template_hash.as_bytes());
    h.finish()
}

/// Cache key for the embedding of one text.
pub fn embed_cache_key(model_id: &str, text: &str) -> String {
    let mut h = KeyHasher::new("narrex/embed/v1");
    h.field(b'm', model_id.as_bytes());
    h.field(b's', text.as_bytes());
    h.finish()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A chat-completion service.
pub trait ChatBackend {
    /// Returns the assistant message content for `req`.
    fn complete(&self, req: &ChatRequest) -> Result<String, ServiceError>;
}

/// A text-embedding service. Every vector returned by one embedder has the
/// same dimension.
pub trait Embedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn complete(&self, req: &ChatRequest) -> Result<String, ServiceError> {
        (**self).complete(req)
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
        (**self).embed(texts)
    }
}

/// Checks that `vectors` has one entry per text and a single dimension.
pub fn check_embeddings(texts: usize, vectors: &[Vec<f64>]) -> Result<usize, ServiceError> {
    if vectors.len() != texts {
        return Err(ServiceError::MalformedResponse(alloc::format!(
            "{} vectors for {texts} texts",
            vectors.len()
        )));
    }
    let Some(first) = vectors.first() else {
        return Ok(0);
    };
    let dim = first.len();
    if dim == 0 {
        return Err(ServiceError::MalformedResponse("zero-length embedding".to_string()));
    }
    for v in vectors {
        if v.len() != dim {
            return Err(ServiceError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(dim)
}

/// Deterministic embedder for tests and offline runs: each string maps to a
/// pseudo-random unit vector seeded by its SHA-256 digest.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: 384 }
    }
}

impl HashEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f64> {
        let seed: [u8; 32] = Sha256::digest(text.as_bytes()).into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        let mut v: Vec<f64> = (0..self.dim)
            .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
            .collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        for x in &mut v {
            *x /= norm;
        }
        v
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
        if texts.is_empty() {
            return Err(ServiceError::InvalidRequest("no texts to embed".to_string()));
        }
        if self.dim == 0 {
            return Err(ServiceError::InvalidRequest("zero embedding dimension".to_string()));
        }
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}
