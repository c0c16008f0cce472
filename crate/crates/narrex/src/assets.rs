//! Templates, examples and dictionaries compiled into the binary. Each can
//! be replaced by a file named in the run configuration.

use narrex_core::cluster::AnchorCluster;
use narrex_core::corpus::Abbreviations;
use narrex_core::prompt::{DecompositionShot, FewShot, LabelShot, Template};
use narrex_core::valence::ValenceDictionary;
use serde::Deserialize;

use crate::error::{AppError, AppResult};

pub const EXTRACTION_TEMPLATE: &str = include_str!("../assets/templates/extraction.txt");
pub const DECOMPOSITION_TEMPLATE: &str = include_str!("../assets/templates/decomposition.txt");
pub const LABELING_TEMPLATE: &str = include_str!("../assets/templates/labeling.txt");
pub const SHOTS: &str = include_str!("../assets/shots.json");
pub const DECOMPOSITION_SHOTS: &str = include_str!("../assets/decomposition_shots.json");
pub const LABEL_SHOTS: &str = include_str!("../assets/label_shots.json");
pub const CLUSTERS: &str = include_str!("../assets/clusters.toml");
pub const VALENCE: &str = include_str!("../assets/valence.toml");
pub const ABBREVIATIONS: &str = include_str!("../assets/abbreviations.txt");

pub fn extraction_template() -> Template {
    Template::new("extraction", EXTRACTION_TEMPLATE)
}

pub fn decomposition_template() -> Template {
    Template::new("decomposition", DECOMPOSITION_TEMPLATE)
}

pub fn labeling_template() -> Template {
    Template::new("labeling", LABELING_TEMPLATE)
}

fn json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> AppResult<T> {
    serde_json::from_str(text).map_err(|e| AppError::Data(format!("{what}: {e}")))
}

pub fn parse_shots(text: &str) -> AppResult<Vec<FewShot>> {
    json("few-shot library", text)
}

pub fn parse_decomposition_shots(text: &str) -> AppResult<Vec<DecompositionShot>> {
    json("decomposition examples", text)
}

pub fn parse_label_shots(text: &str) -> AppResult<Vec<LabelShot>> {
    json("labeling examples", text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterFile {
    cluster: Vec<AnchorCluster>,
}

/// `[[cluster]]` tables with `label`, `anchors` and the optional
/// `include_synonyms` and `exclude_terms`.
pub fn parse_clusters(text: &str) -> AppResult<Vec<AnchorCluster>> {
    let file: ClusterFile = toml::from_str(text).map_err(|e| AppError::Data(format!("anchor clusters: {e}")))?;
    Ok(file.cluster)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValenceFile {
    up: Vec<String>,
    down: Vec<String>,
    #[serde(default)]
    negative_topics: Vec<String>,
}

pub fn parse_valence(text: &str) -> AppResult<ValenceDictionary> {
    let file: ValenceFile = toml::from_str(text).map_err(|e| AppError::Data(format!("valence dictionary: {e}")))?;
    Ok(ValenceDictionary::new(&file.up, &file.down, &file.negative_topics)?)
}

pub fn abbreviations() -> Abbreviations {
    Abbreviations::parse(ABBREVIATIONS)
}
