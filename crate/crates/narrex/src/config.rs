//! Run configuration: a TOML file whose relative paths resolve against the
//! file's directory, with command-line overrides on top.

use std::path::{Path, PathBuf};

use narrex_core::cluster::DEFAULT_SIMILARITY_THRESHOLD;
use narrex_core::corpus::DEFAULT_WINDOW;
use narrex_core::eval::report::Baseline;
use narrex_core::eval::DEFAULT_MATCH_THRESHOLD;
use narrex_core::gateway::{DEFAULT_AUXILIARY_MODEL, DEFAULT_EXTRACTION_MODEL, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};
use narrex_core::prompt::ModelSettings;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{FilterPattern, DEFAULT_FILTER_PATTERN};
use crate::error::{read_text, AppError, AppResult};
use crate::gateway::CacheMode;

pub const DEFAULT_EMBEDDING_MODEL: &str = "all-MiniLM-L6-v2";
pub const DEFAULT_PARALLELISM: usize = 4;
pub const DEFAULT_AUXILIARY_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    corpus: Option<PathBuf>,
    run_dir: Option<PathBuf>,
    filter_pattern: Option<String>,
    window: Option<usize>,
    abbreviations: Option<PathBuf>,
    parallelism: Option<usize>,
    match_threshold: Option<f64>,
    similarity_threshold: Option<f64>,
    clusters: Option<PathBuf>,
    valence: Option<PathBuf>,
    #[serde(default)]
    models: ModelsSection,
    #[serde(default)]
    prompts: PromptsSection,
    #[serde(default)]
    cache: CacheSection,
    #[serde(default)]
    embedding: EmbeddingSection,
    eval: Option<EvalSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelsSection {
    extraction: Option<String>,
    decomposition: Option<String>,
    labeling: Option<String>,
    embedding: Option<String>,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    auxiliary_max_tokens: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptsSection {
    extraction_template: Option<PathBuf>,
    decomposition_template: Option<PathBuf>,
    labeling_template: Option<PathBuf>,
    shots: Option<PathBuf>,
    shot_ids: Option<Vec<String>>,
    decomposition_shots: Option<PathBuf>,
    label_shots: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheSection {
    mode: Option<CacheMode>,
    dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingSection {
    provider: Option<ProviderKind>,
    dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProviderKind {
    Remote,
    DeterministicTest,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalSection {
    gold: PathBuf,
    #[serde(default)]
    experts: Vec<PathBuf>,
    overrides: Option<PathBuf>,
    baseline: Option<Baseline>,
    minor_is_correct: Option<bool>,
    predictions: Option<PathBuf>,
    source: Option<EvalSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "provider", rename_all = "snake_case")]
pub enum EmbeddingProvider {
    Remote { model_id: String },
    DeterministicTest { dim: usize },
}

/// Which stage's narratives are scored when no predictions file is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSource {
    #[default]
    Extract,
    Decompose,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalConfig {
    pub gold: PathBuf,
    pub experts: Vec<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub baseline: Baseline,
    pub minor_is_correct: bool,
    /// Gold-format predictions used instead of pipeline output.
    pub predictions: Option<PathBuf>,
    pub source: EvalSource,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PromptPaths {
    pub extraction_template: Option<PathBuf>,
    pub decomposition_template: Option<PathBuf>,
    pub labeling_template: Option<PathBuf>,
    pub shots: Option<PathBuf>,
    pub shot_ids: Option<Vec<String>>,
    pub decomposition_shots: Option<PathBuf>,
    pub label_shots: Option<PathBuf>,
}

/// A validated configuration with absolute paths. Paths left as `None` fall
/// back to the bundled assets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub run_dir: PathBuf,
    pub filter_pattern: String,
    pub window: usize,
    pub abbreviations: Option<PathBuf>,
    pub parallelism: usize,
    pub match_threshold: f64,
    pub similarity_threshold: f64,
    pub extraction: ModelSettings,
    pub decomposition: ModelSettings,
    pub labeling: ModelSettings,
    pub embedding: EmbeddingProvider,
    pub prompts: PromptPaths,
    pub clusters: Option<PathBuf>,
    pub valence: Option<PathBuf>,
    pub cache_mode: CacheMode,
    pub cache_dir: PathBuf,
    pub eval: Option<EvalConfig>,
}

/// Command-line values that replace configuration keys. Relative paths are
/// taken as given, i.e. relative to the working directory.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub corpus: Option<PathBuf>,
    pub run_dir: Option<PathBuf>,
    pub cache_mode: Option<CacheMode>,
    pub cache_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub window: Option<usize>,
    pub filter_pattern: Option<String>,
    pub match_threshold: Option<f64>,
    pub similarity_threshold: Option<f64>,
}

fn check_unit_interval(name: &str, v: f64) -> AppResult<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(AppError::Config(format!("{name} must be in (0, 1], got {v}")))
    }
}

fn existing(base: &Path, key: &str, p: Option<PathBuf>) -> AppResult<Option<PathBuf>> {
    let Some(p) = p else { return Ok(None) };
    let full = base.join(p);
    if !full.exists() {
        return Err(AppError::Config(format!("{key}: {} does not exist", full.display())));
    }
    Ok(Some(full))
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &ConfigOverrides) -> AppResult<Self> {
        let text = read_text(path).map_err(|e| AppError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
        Self::parse(&text, base, overrides).map_err(|e| match e {
            AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses configuration text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, overrides: &ConfigOverrides) -> AppResult<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        let cwd = Path::new(".");
        let pick = |cli: &Option<PathBuf>, cfg: Option<PathBuf>| match cli {
            Some(p) => Some((cwd, p.clone())),
            None => cfg.map(|p| (base, p)),
        };
        let corpus = match pick(&overrides.corpus, file.corpus) {
            Some((b, p)) => existing(b, "corpus", Some(p))?,
            None => None,
        };
        let run_dir = match pick(&overrides.run_dir, file.run_dir) {
            Some((b, p)) => b.join(p),
            None => base.join("run"),
        };
        let filter_pattern = overrides
            .filter_pattern
            .clone()
            .or(file.filter_pattern)
            .unwrap_or_else(|| DEFAULT_FILTER_PATTERN.to_string());
        FilterPattern::new(&filter_pattern)?;
        let parallelism = overrides.parallelism.or(file.parallelism).unwrap_or(DEFAULT_PARALLELISM);
        if parallelism == 0 {
            return Err(AppError::Config("parallelism must be at least 1".to_string()));
        }
        let match_threshold = overrides.match_threshold.or(file.match_threshold).unwrap_or(DEFAULT_MATCH_THRESHOLD);
        check_unit_interval("match_threshold", match_threshold)?;
        let similarity_threshold = overrides
            .similarity_threshold
            .or(file.similarity_threshold)
            .unwrap_or(DEFAULT_SIMILARITY_THRESHOLD);
        check_unit_interval("similarity_threshold", similarity_threshold)?;

        let m = file.models;
        let temperature = m.temperature.unwrap_or(DEFAULT_TEMPERATURE);
        if !(0.0..=2.0).contains(&temperature) {
            return Err(AppError::Config(format!("models.temperature must be in [0, 2], got {temperature}")));
        }
        let max_tokens = m.max_tokens.unwrap_or(DEFAULT_MAX_TOKENS);
        let aux_tokens = m.auxiliary_max_tokens.unwrap_or(DEFAULT_AUXILIARY_MAX_TOKENS);
        if max_tokens == 0 || aux_tokens == 0 {
            return Err(AppError::Config("token limits must be positive".to_string()));
        }
        let settings = |id: Option<String>, default: &str, tokens: u32| ModelSettings {
            model_id: id.unwrap_or_else(|| default.to_string()),
            temperature,
            max_tokens: tokens,
        };
        let embedding = match file.embedding.provider.unwrap_or(ProviderKind::Remote) {
            ProviderKind::Remote => EmbeddingProvider::Remote {
                model_id: m.embedding.unwrap_or_else(|| DEFAULT_EMBEDDING_MODEL.to_string()),
            },
            ProviderKind::DeterministicTest => {
                let dim = file.embedding.dim.unwrap_or(384);
                if dim == 0 {
                    return Err(AppError::Config("embedding.dim must be positive".to_string()));
                }
                EmbeddingProvider::DeterministicTest { dim }
            }
        };

        let p = file.prompts;
        if p.shot_ids.as_ref().is_some_and(|ids| ids.is_empty()) {
            return Err(AppError::Config("prompts.shot_ids must not be empty".to_string()));
        }
        let prompts = PromptPaths {
            extraction_template: existing(base, "prompts.extraction_template", p.extraction_template)?,
            decomposition_template: existing(base, "prompts.decomposition_template", p.decomposition_template)?,
            labeling_template: existing(base, "prompts.labeling_template", p.labeling_template)?,
            shots: existing(base, "prompts.shots", p.shots)?,
            shot_ids: p.shot_ids,
            decomposition_shots: existing(base, "prompts.decomposition_shots", p.decomposition_shots)?,
            label_shots: existing(base, "prompts.label_shots", p.label_shots)?,
        };

        let eval = match file.eval {
            None => None,
            Some(e) => Some(EvalConfig {
                gold: existing(base, "eval.gold", Some(e.gold))?.expect("given"),
                experts: e
                    .experts
                    .into_iter()
                    .map(|x| existing(base, "eval.experts", Some(x)).map(|x| x.expect("given")))
                    .collect::<AppResult<_>>()?,
                overrides: existing(base, "eval.overrides", e.overrides)?,
                baseline: e.baseline.unwrap_or_default(),
                minor_is_correct: e.minor_is_correct.unwrap_or(true),
                predictions: existing(base, "eval.predictions", e.predictions)?,
                source: e.source.unwrap_or_default(),
            }),
        };

        let cache_dir = match pick(&overrides.cache_dir, file.cache.dir) {
            Some((b, p)) => b.join(p),
            None => base.join("cache"),
        };

        Ok(RunConfig {
            corpus,
            run_dir,
            filter_pattern,
            window: overrides.window.or(file.window).unwrap_or(DEFAULT_WINDOW),
            abbreviations: existing(base, "abbreviations", file.abbreviations)?,
            parallelism,
            match_threshold,
            similarity_threshold,
            extraction: settings(m.extraction, DEFAULT_EXTRACTION_MODEL, max_tokens),
            decomposition: settings(m.decomposition, DEFAULT_AUXILIARY_MODEL, aux_tokens),
            labeling: settings(m.labeling, DEFAULT_AUXILIARY_MODEL, aux_tokens),
            embedding,
            prompts,
            clusters: existing(base, "clusters", file.clusters)?,
            valence: existing(base, "valence", file.valence)?,
            cache_mode: overrides.cache_mode.or(file.cache.mode).unwrap_or_default(),
            cache_dir,
            eval,
        })
    }
}
