//! Content-addressed response cache, one JSON file per entry.

use std::io::Write;
use std::path::{Path, PathBuf};

use narrex_core::gateway::ServiceError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model_id: String,
    /// Response text exactly as received.
    pub response: String,
    /// RFC 3339, informational only.
    pub recorded_at: String,
}

impl CacheEntry {
    pub fn new(key: impl Into<String>, model_id: impl Into<String>, response: impl Into<String>) -> Self {
        CacheEntry {
            key: key.into(),
            model_id: model_id.into(),
            response: response.into(),
            recorded_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// Entries live at `<dir>/<first two hex digits>/<key>.json`. Files are
/// written once and never modified.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Cache(format!("{}: {e}", path.display()))
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> Result<PathBuf, ServiceError> {
        if key.len() < 3 || !key.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ServiceError::Cache(format!("malformed cache key {key:?}")));
        }
        Ok(self.dir.join(&key[..2]).join(format!("{key}.json")))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>, ServiceError> {
        let path = self.path_for(key)?;
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(cache_err(&path, e)),
        };
        let entry: CacheEntry = serde_json::from_str(&text).map_err(|e| cache_err(&path, e))?;
        if entry.key != key {
            return Err(cache_err(&path, format!("holds key {}", entry.key)));
        }
        Ok(Some(entry))
    }

    /// Stores `entry` unless the key is already present, in which case the
    /// stored entry wins and is returned.
    pub fn put(&self, entry: CacheEntry) -> Result<CacheEntry, ServiceError> {
        let path = self.path_for(&entry.key)?;
        let parent = path.parent().expect("entry paths have a parent");
        std::fs::create_dir_all(parent).map_err(|e| cache_err(parent, e))?;
        let mut text = serde_json::to_string_pretty(&entry).map_err(|e| cache_err(&path, e))?;
        text.push('\n');
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| cache_err(parent, e))?;
        tmp.write_all(text.as_bytes()).map_err(|e| cache_err(&path, e))?;
        tmp.as_file().sync_all().map_err(|e| cache_err(&path, e))?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(entry),
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => {
                self.get(&entry.key)?.ok_or_else(|| cache_err(&path, "vanished after a write race"))
            }
            Err(e) => Err(cache_err(&path, e.error)),
        }
    }
}
