//! Stage outputs on disk: JSON Lines files and per-stage manifests that
//! chain to their upstream manifests by hash.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> AppResult<String> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

/// Replaces `path` with `bytes` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| AppError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::io(path, e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("artifact records serialize"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AppError::Data(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// What a stage read, how it was configured and what it wrote. Contains no
/// timestamps, so reruns with unchanged inputs give identical manifests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    /// Upstream stage name to the SHA-256 of its manifest.
    pub upstream: BTreeMap<String, String>,
    /// External input files (corpus, templates, dictionaries) by role.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
    pub models: BTreeMap<String, String>,
    pub template_hashes: BTreeMap<String, String>,
    pub settings: BTreeMap<String, serde_json::Value>,
    pub counts: BTreeMap<String, u64>,
}

/// The run directory, one subdirectory per stage.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.root.join(stage)
    }

    pub fn path(&self, stage: &str, file: &str) -> PathBuf {
        self.stage_dir(stage).join(file)
    }

    /// Loads the manifest of a finished stage and checks that its outputs
    /// are unchanged. Returns the manifest and its hash.
    pub fn require(&self, stage: &'static str) -> AppResult<(Manifest, String)> {
        let path = self.path(stage, MANIFEST);
        if !path.exists() {
            return Err(AppError::MissingStage { stage, artifact: path });
        }
        let bytes = std::fs::read(&path).map_err(|e| AppError::io(&path, e))?;
        let manifest: Manifest =
            serde_json::from_slice(&bytes).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
        for (file, hash) in &manifest.outputs {
            let out = self.path(stage, file);
            if !out.exists() {
                return Err(AppError::MissingStage { stage, artifact: out });
            }
            if &file_sha256(&out)? != hash {
                return Err(AppError::Data(format!(
                    "{} changed after the `{stage}` stage wrote it; rerun that stage",
                    out.display()
                )));
            }
        }
        Ok((manifest, sha256_bytes(&bytes)))
    }

    /// Writes the stage outputs, then the manifest listing their hashes.
    pub fn commit(&self, mut manifest: Manifest, outputs: &[(&str, String)]) -> AppResult<Manifest> {
        let dir = self.stage_dir(&manifest.stage);
        std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        let stale = self.path(&manifest.stage, MANIFEST);
        if stale.exists() {
            std::fs::remove_file(&stale).map_err(|e| AppError::io(&stale, e))?;
        }
        manifest.outputs.clear();
        for (file, content) in outputs {
            write_atomic(&dir.join(file), content.as_bytes())?;
            manifest.outputs.insert(file.to_string(), sha256_bytes(content.as_bytes()));
        }
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
        text.push('\n');
        write_atomic(&dir.join(MANIFEST), text.as_bytes())?;
        Ok(manifest)
    }
}
