//! The pipeline stages. Each stage reads its upstream artifacts from the run
//! directory, writes its own, and records a manifest.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use narrex_core::canonical::{canonicalize_direction, Directed, NormalizedNarrative, Part};
use narrex_core::cluster::{AnchorCluster, Assignment, ClusterIndex, UnclusteredReason};
use narrex_core::corpus::{excerpts_for, Abbreviations, Document, Excerpt};
use narrex_core::cot::{finalize_narrative, parse_cot_response, Diagnostic, ParseMode, Provenance};
use narrex_core::decompose::{decompose_event, expand_forks, AtomicEvent, Side};
use narrex_core::eval::report::{compute_report, evaluate_corpus, ReportSettings};
use narrex_core::eval::Overrides;
use narrex_core::gateway::{ChatBackend, Embedder, HashEmbedder, ServiceError};
use narrex_core::gold::{collapse_whitespace, parse_gold_file, GoldDocument};
use narrex_core::label::{label_narrative, LabelOutcome, ValenceTopic};
use narrex_core::prompt::{
    assemble_decomposition_prompt, assemble_extraction_prompt, assemble_valence_topic_prompt, DecompositionShot,
    FewShot, LabelShot, Template, DEFAULT_SHOT_COUNT,
};
use narrex_core::valence::{normalize_valence, ValenceDictionary};
use narrex_core::{Error, EventPair, RawNarrative, Source};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{read_jsonl, sha256_bytes, to_jsonl, Manifest, RunDir};
use crate::assets;
use crate::cache::Cache;
use crate::config::{EmbeddingProvider, EvalSource, RunConfig};
use crate::corpus_io::{load_corpus, FilterPattern};
use crate::error::{read_text, AppError, AppResult};
use crate::gateway::{CachedEmbedder, Gateway};
use crate::http::{HttpClient, HttpSettings};
use crate::reports;
use crate::tables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Extract,
    Decompose,
    Classify,
    Normalize,
    Aggregate,
    Eval,
}

impl Stage {
    /// The stages `pipeline` runs, in order. `eval` is opt-in.
    pub const PIPELINE: [Stage; 6] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Decompose,
        Stage::Classify,
        Stage::Normalize,
        Stage::Aggregate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Decompose => "decompose",
            Stage::Classify => "classify",
            Stage::Normalize => "normalize",
            Stage::Aggregate => "aggregate",
            Stage::Eval => "eval",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcerptRecord {
    pub id: String,
    #[serde(flatten)]
    pub excerpt: Excerpt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractDiagnostic {
    pub excerpt: String,
    #[serde(flatten)]
    pub diagnostic: Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomsRecord {
    pub narrative: String,
    pub side: Side,
    pub event: String,
    pub atoms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub narrative: String,
    pub doc_id: String,
    pub pair: EventPair,
    pub outcome: LabelOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub topic: String,
    pub occurrences: u64,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedRecord {
    pub doc_id: String,
    pub key: String,
    pub human: String,
    pub narrative: NormalizedNarrative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedRecord {
    pub narrative: String,
    pub doc_id: String,
    pub reason: String,
}

type SharedChat = Box<dyn ChatBackend + Send + Sync>;
type SharedEmbedder = Box<dyn Embedder + Send + Sync>;

/// A text input together with the hash recorded in manifests.
struct Loaded {
    text: String,
    hash: String,
}

fn load_or(path: &Option<PathBuf>, bundled: &str) -> AppResult<Loaded> {
    let text = match path {
        Some(p) => read_text(p)?,
        None => bundled.to_string(),
    };
    let hash = sha256_bytes(text.as_bytes());
    Ok(Loaded { text, hash })
}

/// Runs stages against one configuration and run directory.
pub struct Pipeline {
    config: RunConfig,
    run: RunDir,
    http: Option<HttpSettings>,
    chat: OnceLock<SharedChat>,
    embedder: OnceLock<SharedEmbedder>,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> AppResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
        Ok(Pipeline {
            run: RunDir::new(&config.run_dir),
            config,
            http: None,
            chat: OnceLock::new(),
            embedder: OnceLock::new(),
            pool,
        })
    }

    /// Uses these HTTP settings instead of reading the environment.
    pub fn with_http(mut self, settings: HttpSettings) -> Self {
        self.http = Some(settings);
        self
    }

    pub fn with_chat(self, chat: SharedChat) -> Self {
        let _ = self.chat.set(chat);
        self
    }

    pub fn with_embedder(self, embedder: SharedEmbedder) -> Self {
        let _ = self.embedder.set(embedder);
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn run_dir(&self) -> &RunDir {
        &self.run
    }

    fn client(&self) -> AppResult<Option<HttpClient>> {
        if !self.config.cache_mode.needs_network() {
            return Ok(None);
        }
        let settings = match &self.http {
            Some(s) => s.clone(),
            None => HttpSettings::from_env().map_err(|e| AppError::Config(e.to_string()))?,
        };
        Ok(Some(HttpClient::new(settings)))
    }

    fn cache(&self) -> Cache {
        Cache::new(&self.config.cache_dir)
    }

    fn chat(&self) -> AppResult<&(dyn ChatBackend + Send + Sync)> {
        if self.chat.get().is_none() {
            let gateway = Gateway::new(self.config.cache_mode, Some(self.cache()), self.client()?)?;
            let _ = self.chat.set(Box::new(gateway));
        }
        Ok(self.chat.get().expect("set above").as_ref())
    }

    fn embedder(&self) -> AppResult<&(dyn Embedder + Send + Sync)> {
        if self.embedder.get().is_none() {
            let embedder: SharedEmbedder = match &self.config.embedding {
                EmbeddingProvider::DeterministicTest { dim } => Box::new(HashEmbedder { dim: *dim }),
                EmbeddingProvider::Remote { model_id } => Box::new(CachedEmbedder::new(
                    model_id.clone(),
                    self.config.cache_mode,
                    Some(self.cache()),
                    self.client()?,
                )?),
            };
            let _ = self.embedder.set(embedder);
        }
        Ok(self.embedder.get().expect("set above").as_ref())
    }

    /// Maps `f` over `items` on the worker pool, keeping input order. The
    /// first failure in input order is reported.
    fn par_map<T, R, F>(&self, items: &[T], f: F) -> AppResult<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> AppResult<R> + Sync + Send,
    {
        let results: Vec<AppResult<R>> = self.pool.install(|| items.par_iter().map(f).collect());
        results.into_iter().collect()
    }

    pub fn run(&self, stage: Stage) -> AppResult<Manifest> {
        log::info!("running stage {}", stage.name());
        let manifest = match stage {
            Stage::Ingest => self.ingest(),
            Stage::Extract => self.extract(),
            Stage::Decompose => self.decompose(),
            Stage::Classify => self.classify(),
            Stage::Normalize => self.normalize(),
            Stage::Aggregate => self.aggregate(),
            Stage::Eval => self.eval(),
        }?;
        log::info!("stage {} done: {:?}", stage.name(), manifest.counts);
        Ok(manifest)
    }

    pub fn run_all(&self, stages: &[Stage]) -> AppResult<Vec<Manifest>> {
        stages.iter().map(|&s| self.run(s)).collect()
    }

    fn manifest(&self, stage: Stage) -> Manifest {
        Manifest {
            stage: stage.name().to_string(),
            ..Manifest::default()
        }
    }

    fn upstream(&self, manifest: &mut Manifest, stage: Stage) -> AppResult<Manifest> {
        let (up, hash) = self.run.require(stage.name())?;
        manifest.upstream.insert(stage.name().to_string(), hash);
        Ok(up)
    }

    fn stage_file(&self, stage: Stage, file: &str) -> PathBuf {
        self.run.path(stage.name(), file)
    }

    fn ingest(&self) -> AppResult<Manifest> {
        let cfg = &self.config;
        let corpus = cfg
            .corpus
            .as_ref()
            .ok_or_else(|| AppError::Config("no corpus configured".to_string()))?;
        let docs = load_corpus(corpus)?;
        let abbrev_text = load_or(&cfg.abbreviations, assets::ABBREVIATIONS)?;
        let abbreviations = Abbreviations::parse(&abbrev_text.text);
        let filter = FilterPattern::new(&cfg.filter_pattern)?;
        let mut excerpts = Vec::new();
        for doc in &docs {
            let found = excerpts_for(doc, &abbreviations, &filter, cfg.window);
            if found.is_empty() {
                log::debug!("document {} has no matching sentence", doc.id);
            }
            excerpts.extend(found.into_iter().map(|e| ExcerptRecord { id: e.id(), excerpt: e }));
        }
        let mut m = self.manifest(Stage::Ingest);
        m.inputs.insert("corpus".into(), crate::artifacts::file_sha256(corpus)?);
        m.inputs.insert("abbreviations".into(), abbrev_text.hash);
        m.settings.insert("filter_pattern".into(), json!(filter.as_str()));
        m.settings.insert("window".into(), json!(cfg.window));
        m.counts.insert("documents".into(), docs.len() as u64);
        m.counts.insert("excerpts".into(), excerpts.len() as u64);
        self.run.commit(
            m,
            &[("documents.jsonl", to_jsonl(&docs)), ("excerpts.jsonl", to_jsonl(&excerpts))],
        )
    }

    fn template(&self, path: &Option<PathBuf>, name: &str, bundled: &str) -> AppResult<Template> {
        Ok(Template::new(name, load_or(path, bundled)?.text))
    }

    fn shots(&self) -> AppResult<(Vec<FewShot>, String)> {
        let loaded = load_or(&self.config.prompts.shots, assets::SHOTS)?;
        let library = assets::parse_shots(&loaded.text)?;
        let shots = match &self.config.prompts.shot_ids {
            Some(ids) => ids
                .iter()
                .map(|id| {
                    library
                        .iter()
                        .find(|s| &s.id == id)
                        .cloned()
                        .ok_or_else(|| AppError::Config(format!("prompts.shot_ids: no example with id {id:?}")))
                })
                .collect::<AppResult<Vec<_>>>()?,
            None => library.into_iter().take(DEFAULT_SHOT_COUNT).collect(),
        };
        Ok((shots, loaded.hash))
    }

    fn extract(&self) -> AppResult<Manifest> {
        let mut m = self.manifest(Stage::Extract);
        self.upstream(&mut m, Stage::Ingest)?;
        let excerpts: Vec<ExcerptRecord> = read_jsonl(&self.stage_file(Stage::Ingest, "excerpts.jsonl"))?;
        let template = self.template(
            &self.config.prompts.extraction_template,
            "extraction",
            assets::EXTRACTION_TEMPLATE,
        )?;
        let (shots, shots_hash) = self.shots()?;
        let settings = &self.config.extraction;
        let chat = self.chat()?;
        let parsed = self.par_map(&excerpts, |rec| {
            let bundle = assemble_extraction_prompt(&template, &rec.excerpt, &shots, settings)?;
            let response = chat.complete(&bundle.to_request())?;
            let parse = parse_cot_response(&response, ParseMode::Lenient).map_err(|e| match e {
                Error::NotJson(_) | Error::UnexpectedShape(_) => {
                    AppError::Service(ServiceError::MalformedResponse(format!("extraction for {}: {e}", rec.id)))
                }
                other => other.into(),
            })?;
            Ok(parse)
        })?;

        let mut narratives = Vec::new();
        let mut diagnostics = Vec::new();
        let mut seen: HashSet<(String, String, narrex_core::Connector, String)> = HashSet::new();
        let mut duplicates = 0u64;
        let mut rejected = 0u64;
        for (rec, parse) in excerpts.iter().zip(parsed) {
            rejected += parse.rejected() as u64;
            diagnostics.extend(parse.diagnostics.into_iter().map(|d| ExtractDiagnostic {
                excerpt: rec.id.clone(),
                diagnostic: d,
            }));
            for (k, trace) in parse.traces.into_iter().enumerate() {
                let n = finalize_narrative(
                    trace,
                    Provenance {
                        id: format!("{}#{}", rec.id, k + 1),
                        doc_id: rec.excerpt.doc_id.clone(),
                        excerpt_span: Some(rec.excerpt.span),
                        source: Source::Model,
                    },
                );
                let key = (
                    n.doc_id.clone(),
                    collapse_whitespace(&n.pair.event_a).to_lowercase(),
                    n.pair.connector,
                    collapse_whitespace(&n.pair.event_b).to_lowercase(),
                );
                if seen.insert(key) {
                    narratives.push(n);
                } else {
                    log::debug!("dropping {}: repeats an earlier narrative of {}", n.id, n.doc_id);
                    duplicates += 1;
                }
            }
        }
        m.inputs.insert("shots".into(), shots_hash);
        m.template_hashes.insert("extraction".into(), template.hash().to_string());
        m.models.insert("extraction".into(), settings.model_id.clone());
        m.settings.insert("temperature".into(), json!(settings.temperature));
        m.settings.insert("max_tokens".into(), json!(settings.max_tokens));
        m.settings.insert("shot_ids".into(), json!(shots.iter().map(|s| &s.id).collect::<Vec<_>>()));
        m.counts.insert("excerpts".into(), excerpts.len() as u64);
        m.counts.insert("narratives".into(), narratives.len() as u64);
        m.counts.insert("rejected_records".into(), rejected);
        m.counts.insert("duplicates_dropped".into(), duplicates);
        self.run.commit(
            m,
            &[
                ("narratives.jsonl", to_jsonl(&narratives)),
                ("diagnostics.jsonl", to_jsonl(&diagnostics)),
            ],
        )
    }

    fn decompose(&self) -> AppResult<Manifest> {
        let mut m = self.manifest(Stage::Decompose);
        self.upstream(&mut m, Stage::Extract)?;
        let narratives: Vec<RawNarrative> = read_jsonl(&self.stage_file(Stage::Extract, "narratives.jsonl"))?;
        let template = self.template(
            &self.config.prompts.decomposition_template,
            "decomposition",
            assets::DECOMPOSITION_TEMPLATE,
        )?;
        let shots_text = load_or(&self.config.prompts.decomposition_shots, assets::DECOMPOSITION_SHOTS)?;
        let shots: Vec<DecompositionShot> = assets::parse_decomposition_shots(&shots_text.text)?;
        let settings = &self.config.decomposition;
        let chat = self.chat()?;

        // One request per distinct event text.
        let mut events: BTreeMap<String, AtomicEvent> = BTreeMap::new();
        for n in &narratives {
            for (text, side) in [(&n.pair.event_a, Side::A), (&n.pair.event_b, Side::B)] {
                events.entry(text.clone()).or_insert_with(|| AtomicEvent {
                    text: text.clone(),
                    parent: n.id.clone(),
                    side,
                });
            }
        }
        let unique: Vec<AtomicEvent> = events.into_values().collect();
        let splits = self.par_map(&unique, |event| {
            let bundle = assemble_decomposition_prompt(&template, &event.text, &shots, settings)?;
            Ok(decompose_event(chat, &bundle, event)?)
        })?;
        let split: BTreeMap<&str, _> = unique.iter().map(|e| e.text.as_str()).zip(splits).collect();

        let mut expanded = Vec::new();
        let mut atoms = Vec::new();
        for n in &narratives {
            let a = &split[n.pair.event_a.as_str()];
            let b = &split[n.pair.event_b.as_str()];
            for (side, event, d) in [(Side::A, &n.pair.event_a, a), (Side::B, &n.pair.event_b, b)] {
                atoms.push(AtomsRecord {
                    narrative: n.id.clone(),
                    side,
                    event: event.clone(),
                    atoms: d.atoms.clone(),
                    note: d.note.clone(),
                });
            }
            expanded.extend(expand_forks(n, &a.atoms, &b.atoms));
        }
        m.inputs.insert("decomposition_shots".into(), shots_text.hash);
        m.template_hashes.insert("decomposition".into(), template.hash().to_string());
        m.models.insert("decomposition".into(), settings.model_id.clone());
        m.settings.insert("temperature".into(), json!(settings.temperature));
        m.counts.insert("input_narratives".into(), narratives.len() as u64);
        m.counts.insert("distinct_events".into(), unique.len() as u64);
        m.counts.insert("narratives".into(), expanded.len() as u64);
        self.run.commit(
            m,
            &[("narratives.jsonl", to_jsonl(&expanded)), ("atoms.jsonl", to_jsonl(&atoms))],
        )
    }

    fn classify(&self) -> AppResult<Manifest> {
        let mut m = self.manifest(Stage::Classify);
        self.upstream(&mut m, Stage::Decompose)?;
        let narratives: Vec<RawNarrative> = read_jsonl(&self.stage_file(Stage::Decompose, "narratives.jsonl"))?;
        let template = self.template(&self.config.prompts.labeling_template, "labeling", assets::LABELING_TEMPLATE)?;
        let shots_text = load_or(&self.config.prompts.label_shots, assets::LABEL_SHOTS)?;
        let shots: Vec<LabelShot> = assets::parse_label_shots(&shots_text.text)?;
        let settings = &self.config.labeling;
        let chat = self.chat()?;
        let labels = self.par_map(&narratives, |n| {
            let bundle = assemble_valence_topic_prompt(&template, n, &shots, settings)?;
            Ok(LabelRecord {
                narrative: n.id.clone(),
                doc_id: n.doc_id.clone(),
                pair: n.pair.clone(),
                outcome: label_narrative(chat, &bundle)?,
            })
        })?;
        let unlabeled = labels
            .iter()
            .filter(|l| matches!(l.outcome, LabelOutcome::Unlabeled { .. }))
            .count() as u64;
        m.inputs.insert("label_shots".into(), shots_text.hash);
        m.template_hashes.insert("labeling".into(), template.hash().to_string());
        m.models.insert("labeling".into(), settings.model_id.clone());
        m.settings.insert("temperature".into(), json!(settings.temperature));
        m.counts.insert("narratives".into(), labels.len() as u64);
        m.counts.insert("unlabeled".into(), unlabeled);
        self.run.commit(m, &[("labels.jsonl", to_jsonl(&labels))])
    }

    pub fn load_clusters(&self) -> AppResult<(Vec<AnchorCluster>, String)> {
        let loaded = load_or(&self.config.clusters, assets::CLUSTERS)?;
        Ok((assets::parse_clusters(&loaded.text)?, loaded.hash))
    }

    fn load_valence(&self) -> AppResult<(ValenceDictionary, String)> {
        let loaded = load_or(&self.config.valence, assets::VALENCE)?;
        Ok((assets::parse_valence(&loaded.text)?, loaded.hash))
    }

    fn normalize(&self) -> AppResult<Manifest> {
        let mut m = self.manifest(Stage::Normalize);
        self.upstream(&mut m, Stage::Classify)?;
        let labels: Vec<LabelRecord> = read_jsonl(&self.stage_file(Stage::Classify, "labels.jsonl"))?;
        let (clusters, clusters_hash) = self.load_clusters()?;
        let (dictionary, valence_hash) = self.load_valence()?;
        let embedder = self.embedder()?;
        let index = ClusterIndex::build(clusters, self.config.similarity_threshold, embedder)?;

        let mut occurrences: BTreeMap<&str, u64> = BTreeMap::new();
        for l in &labels {
            if let LabelOutcome::Labeled(nl) = &l.outcome {
                *occurrences.entry(&nl.a.topic).or_default() += 1;
                *occurrences.entry(&nl.b.topic).or_default() += 1;
            }
        }
        let assignments = assign_topics(&index, embedder, occurrences.keys().copied())?;

        let mut normalized = Vec::new();
        let mut excluded = Vec::new();
        for l in &labels {
            let exclude = |reason: String| ExcludedRecord {
                narrative: l.narrative.clone(),
                doc_id: l.doc_id.clone(),
                reason,
            };
            let nl = match &l.outcome {
                LabelOutcome::Labeled(nl) => nl,
                LabelOutcome::Unlabeled { reason } => {
                    excluded.push(exclude(format!("unlabeled: {reason}")));
                    continue;
                }
            };
            match (part(&nl.a, &assignments, &dictionary), part(&nl.b, &assignments, &dictionary)) {
                (Ok(a), Ok(b)) => {
                    let n = canonicalize_direction(
                        Directed {
                            a,
                            connector: l.pair.connector,
                            b,
                        },
                        vec![l.narrative.clone()],
                    );
                    normalized.push(NormalizedRecord {
                        doc_id: l.doc_id.clone(),
                        key: n.key(),
                        human: n.human(),
                        narrative: n,
                    });
                }
                (Err(reason), _) | (_, Err(reason)) => excluded.push(exclude(reason)),
            }
        }
        let topics: Vec<TopicRecord> = occurrences
            .iter()
            .map(|(&topic, &count)| TopicRecord {
                topic: topic.to_string(),
                occurrences: count,
                assignment: assignments[topic].clone(),
            })
            .collect();
        m.inputs.insert("clusters".into(), clusters_hash);
        m.inputs.insert("valence".into(), valence_hash);
        m.settings.insert("similarity_threshold".into(), json!(self.config.similarity_threshold));
        m.settings.insert("embedding".into(), json!(self.config.embedding));
        m.counts.insert("labels".into(), labels.len() as u64);
        m.counts.insert("topics".into(), topics.len() as u64);
        m.counts.insert("normalized".into(), normalized.len() as u64);
        m.counts.insert("excluded".into(), excluded.len() as u64);
        self.run.commit(
            m,
            &[
                ("normalized.jsonl", to_jsonl(&normalized)),
                ("topics.jsonl", to_jsonl(&topics)),
                ("excluded.jsonl", to_jsonl(&excluded)),
            ],
        )
    }

    fn aggregate(&self) -> AppResult<Manifest> {
        let mut m = self.manifest(Stage::Aggregate);
        self.upstream(&mut m, Stage::Ingest)?;
        self.upstream(&mut m, Stage::Classify)?;
        self.upstream(&mut m, Stage::Normalize)?;
        let docs: Vec<Document> = read_jsonl(&self.stage_file(Stage::Ingest, "documents.jsonl"))?;
        let labels: Vec<LabelRecord> = read_jsonl(&self.stage_file(Stage::Classify, "labels.jsonl"))?;
        let normalized: Vec<NormalizedRecord> = read_jsonl(&self.stage_file(Stage::Normalize, "normalized.jsonl"))?;
        let excluded: Vec<ExcludedRecord> = read_jsonl(&self.stage_file(Stage::Normalize, "excluded.jsonl"))?;

        let mut per_doc: BTreeMap<String, (u64, u64)> = docs.iter().map(|d| (d.id.clone(), (0, 0))).collect();
        for l in &labels {
            per_doc.entry(l.doc_id.clone()).or_default().0 += 1;
        }
        for n in &normalized {
            per_doc.entry(n.doc_id.clone()).or_default().1 += n.narrative.weight;
        }
        let narratives: Vec<NormalizedNarrative> = normalized.into_iter().map(|r| r.narrative).collect();
        let summary = tables::summarize(&narratives, excluded.len() as u64, &per_doc);
        let mut summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        summary_json.push('\n');
        m.counts.insert("normalized".into(), summary.normalized_narratives);
        m.counts.insert("distinct_narratives".into(), summary.narratives.len() as u64);
        m.counts.insert("residual".into(), summary.residual);
        self.run.commit(
            m,
            &[
                ("narratives.tsv", tables::narratives_tsv(&summary)),
                ("parts.tsv", tables::parts_tsv(&summary)),
                ("shares.tsv", tables::shares_tsv(&summary)),
                ("documents.tsv", tables::documents_tsv(&summary)),
                ("summary.json", summary_json),
            ],
        )
    }

    fn predictions(&self, m: &mut Manifest, source: EvalSource) -> AppResult<BTreeMap<String, Vec<RawNarrative>>> {
        let stage = match source {
            EvalSource::Extract => Stage::Extract,
            EvalSource::Decompose => Stage::Decompose,
        };
        self.upstream(m, stage)?;
        let narratives: Vec<RawNarrative> = read_jsonl(&self.stage_file(stage, "narratives.jsonl"))?;
        self.upstream(m, Stage::Ingest)?;
        let docs: Vec<Document> = read_jsonl(&self.stage_file(Stage::Ingest, "documents.jsonl"))?;
        let headers: BTreeMap<&str, String> = docs.iter().map(|d| (d.id.as_str(), d.header())).collect();
        let mut out: BTreeMap<String, Vec<RawNarrative>> = BTreeMap::new();
        for n in narratives {
            let header = headers
                .get(n.doc_id.as_str())
                .ok_or_else(|| AppError::Data(format!("narrative {} names unknown document {}", n.id, n.doc_id)))?;
            out.entry(header.clone()).or_default().push(n);
        }
        Ok(out)
    }

    fn eval(&self) -> AppResult<Manifest> {
        let cfg = self
            .config
            .eval
            .as_ref()
            .ok_or_else(|| AppError::Config("no [eval] section in the configuration".to_string()))?;
        let mut m = self.manifest(Stage::Eval);
        let gold_text = read_text(&cfg.gold)?;
        let gold = parse_gold_file(&gold_text, Source::Gold).map_err(|e| data_at(&cfg.gold, e))?;
        m.inputs.insert("gold".into(), sha256_bytes(gold_text.as_bytes()));

        let predicted = match &cfg.predictions {
            Some(path) => {
                let text = read_text(path)?;
                m.inputs.insert("predictions".into(), sha256_bytes(text.as_bytes()));
                by_header(parse_gold_file(&text, Source::Model).map_err(|e| data_at(path, e))?)
            }
            None => self.predictions(&mut m, cfg.source)?,
        };
        let overrides = match &cfg.overrides {
            Some(path) => {
                let text = read_text(path)?;
                m.inputs.insert("overrides".into(), sha256_bytes(text.as_bytes()));
                Some(Overrides::parse(&text).map_err(|e| data_at(path, e))?)
            }
            None => None,
        };
        let settings = ReportSettings {
            match_threshold: self.config.match_threshold,
            baseline: cfg.baseline,
            minor_is_correct: cfg.minor_is_correct,
        };
        let model = evaluate_corpus(&gold, &predicted, &settings, overrides.as_ref())?;
        let mut experts = Vec::new();
        for (k, path) in cfg.experts.iter().enumerate() {
            let text = read_text(path)?;
            m.inputs.insert(format!("expert{}", k + 1), sha256_bytes(text.as_bytes()));
            let annotations = parse_gold_file(&text, Source::Expert(k as u32 + 1)).map_err(|e| data_at(path, e))?;
            experts.push(evaluate_corpus(&gold, &by_header(annotations), &settings, None)?);
        }
        let report = compute_report(model, &experts, &settings)?;

        let all_pred: BTreeMap<&str, &RawNarrative> =
            predicted.values().flatten().map(|n| (n.id.as_str(), n)).collect();
        let all_gold: BTreeMap<&str, &RawNarrative> =
            gold.iter().flat_map(|d| &d.narratives).map(|n| (n.id.as_str(), n)).collect();
        let mut report_json = serde_json::to_string_pretty(&report).expect("reports serialize");
        report_json.push('\n');
        m.settings.insert("report".into(), json!(settings));
        m.counts.insert("documents".into(), report.documents as u64);
        m.counts.insert("gold_narratives".into(), report.gold_narratives as u64);
        m.counts.insert("predicted_narratives".into(), report.predicted_narratives as u64);
        self.run.commit(
            m,
            &[
                ("report.json", report_json),
                ("report.txt", reports::report_text(&report, &all_pred, &all_gold)),
                ("deviations.tsv", reports::deviations_tsv(&report, &all_pred, &all_gold)),
            ],
        )
    }
}

fn data_at(path: &Path, e: Error) -> AppError {
    AppError::Data(format!("{}: {e}", path.display()))
}

fn by_header(docs: Vec<GoldDocument>) -> BTreeMap<String, Vec<RawNarrative>> {
    let mut out: BTreeMap<String, Vec<RawNarrative>> = BTreeMap::new();
    for d in docs {
        out.entry(d.header()).or_default().extend(d.narratives);
    }
    out
}

/// Assigns every topic: override rules first, then one embedding batch for
/// the rest. A missing replay fixture stops the stage; other embedding
/// failures leave the affected topics unclustered.
pub fn assign_topics<'a, E: Embedder + ?Sized>(
    index: &ClusterIndex,
    embedder: &E,
    topics: impl IntoIterator<Item = &'a str>,
) -> AppResult<BTreeMap<String, Assignment>> {
    let mut out = BTreeMap::new();
    let mut pending = Vec::new();
    for topic in topics {
        match index.assign_by_rules(topic) {
            Some(a) => {
                out.insert(topic.to_string(), a);
            }
            None => pending.push(topic.to_string()),
        }
    }
    if pending.is_empty() {
        return Ok(out);
    }
    match embedder.embed(&pending) {
        Ok(vectors) => {
            for (topic, v) in pending.into_iter().zip(vectors) {
                let a = index.assign_vector(&v);
                out.insert(topic, a);
            }
        }
        Err(e @ ServiceError::MissingFixture { .. }) => return Err(e.into()),
        Err(e) => {
            log::warn!("embedding {} topics failed: {e}", pending.len());
            for topic in pending {
                out.insert(
                    topic,
                    Assignment::Unclustered {
                        reason: UnclusteredReason::EmbeddingFailed,
                        nearest: None,
                        similarity: None,
                    },
                );
            }
        }
    }
    Ok(out)
}

fn part(vt: &ValenceTopic, assignments: &BTreeMap<String, Assignment>, dict: &ValenceDictionary) -> Result<Part, String> {
    let arrow = normalize_valence(vt, dict).map_err(|_| {
        log::warn!("unknown valence term {:?} (topic {:?})", vt.valence, vt.topic);
        format!("unknown valence term {:?}", vt.valence)
    })?;
    match assignments.get(&vt.topic) {
        Some(Assignment::Clustered { slug, .. }) => Ok(Part::new(arrow, slug.clone())),
        Some(Assignment::Unclustered { reason, .. }) => Err(format!("topic {:?} unclustered ({reason:?})", vt.topic)),
        None => Err(format!("topic {:?} was not assigned", vt.topic)),
    }
}
