//! Chat and embedding backends with record/replay caching.

use narrex_core::gateway::{cache_key, check_embeddings, embed_cache_key, ChatBackend, ChatRequest, Embedder, ServiceError};
use serde::{Deserialize, Serialize};

use crate::cache::{Cache, CacheEntry};
use crate::http::HttpClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Always call the service; nothing is cached.
    Live,
    /// Serve cache hits, call the service for misses and store the answers.
    Record,
    /// Serve from the cache only; a miss is an error.
    #[default]
    Replay,
}

impl CacheMode {
    pub fn needs_network(self) -> bool {
        self != CacheMode::Replay
    }
}

struct Backing {
    mode: CacheMode,
    cache: Option<Cache>,
    client: Option<HttpClient>,
}

impl Backing {
    fn new(mode: CacheMode, cache: Option<Cache>, client: Option<HttpClient>) -> Result<Self, ServiceError> {
        if mode != CacheMode::Live && cache.is_none() {
            return Err(ServiceError::InvalidRequest(format!("{mode:?} mode needs a cache directory")));
        }
        if mode.needs_network() && client.is_none() {
            return Err(ServiceError::InvalidRequest(format!("{mode:?} mode needs an API client")));
        }
        Ok(Backing { mode, cache, client })
    }

    fn cache(&self) -> &Cache {
        self.cache.as_ref().expect("checked in Backing::new")
    }

    fn client(&self) -> &HttpClient {
        self.client.as_ref().expect("checked in Backing::new")
    }

    fn lookup(&self, key: &str) -> Result<Option<String>, ServiceError> {
        match self.mode {
            CacheMode::Live => Ok(None),
            _ => Ok(self.cache().get(key)?.map(|e| e.response)),
        }
    }
}

/// Chat backend that routes requests through the cache according to the
/// mode. Requests are validated before anything else happens.
pub struct Gateway {
    backing: Backing,
}

impl Gateway {
    pub fn new(mode: CacheMode, cache: Option<Cache>, client: Option<HttpClient>) -> Result<Self, ServiceError> {
        Ok(Gateway {
            backing: Backing::new(mode, cache, client)?,
        })
    }

    pub fn replay(cache: Cache) -> Self {
        Gateway::new(CacheMode::Replay, Some(cache), None).expect("replay needs only a cache")
    }

    pub fn mode(&self) -> CacheMode {
        self.backing.mode
    }
}

impl ChatBackend for Gateway {
    fn complete(&self, req: &ChatRequest) -> Result<String, ServiceError> {
        req.validate()?;
        let key = cache_key(req);
        if let Some(hit) = self.backing.lookup(&key)? {
            return Ok(hit);
        }
        match self.backing.mode {
            CacheMode::Replay => Err(ServiceError::MissingFixture { key }),
            CacheMode::Live => self.backing.client().chat(req),
            CacheMode::Record => {
                let response = self.backing.client().chat(req)?;
                let stored = self.backing.cache().put(CacheEntry::new(key, &req.model_id, response))?;
                Ok(stored.response)
            }
        }
    }
}

/// Remote embedder caching one vector per (model, text).
pub struct CachedEmbedder {
    model_id: String,
    backing: Backing,
    batch_size: usize,
}

impl CachedEmbedder {
    pub fn new(
        model_id: impl Into<String>,
        mode: CacheMode,
        cache: Option<Cache>,
        client: Option<HttpClient>,
    ) -> Result<Self, ServiceError> {
        Ok(CachedEmbedder {
            model_id: model_id.into(),
            backing: Backing::new(mode, cache, client)?,
            batch_size: 128,
        })
    }

    fn fetch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            let vectors = self.backing.client().embed(&self.model_id, chunk)?;
            check_embeddings(chunk.len(), &vectors)?;
            out.extend(vectors);
        }
        Ok(out)
    }
}

impl Embedder for CachedEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
        if texts.is_empty() {
            return Err(ServiceError::InvalidRequest("no texts to embed".to_string()));
        }
        let keys: Vec<String> = texts.iter().map(|t| embed_cache_key(&self.model_id, t)).collect();
        let mut found: Vec<Option<Vec<f64>>> = Vec::with_capacity(texts.len());
        for key in &keys {
            let vector = match self.backing.lookup(key)? {
                Some(text) => Some(
                    serde_json::from_str(&text)
                        .map_err(|e| ServiceError::Cache(format!("embedding entry {key}: {e}")))?,
                ),
                None => None,
            };
            found.push(vector);
        }
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| found[i].is_none()).collect();
        if !missing.is_empty() {
            if self.backing.mode == CacheMode::Replay {
                return Err(ServiceError::MissingFixture {
                    key: keys[missing[0]].clone(),
                });
            }
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fetched = self.fetch(&batch)?;
            for (&i, vector) in missing.iter().zip(fetched) {
                let vector = if self.backing.mode == CacheMode::Record {
                    let text = serde_json::to_string(&vector).expect("vectors serialize");
                    let stored = self.backing.cache().put(CacheEntry::new(&keys[i], &self.model_id, text))?;
                    serde_json::from_str(&stored.response)
                        .map_err(|e| ServiceError::Cache(format!("embedding entry {}: {e}", keys[i])))?
                } else {
                    vector
                };
                found[i] = Some(vector);
            }
        }
        let vectors: Vec<Vec<f64>> = found.into_iter().map(|v| v.expect("filled above")).collect();
        check_embeddings(texts.len(), &vectors)?;
        Ok(vectors)
    }
}
