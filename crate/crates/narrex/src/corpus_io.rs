//! Reading corpora, abbreviation lists and the relevance filter.

use std::collections::HashMap;
use std::path::Path;

use narrex_core::corpus::{Abbreviations, Document, SentenceMatcher};
use regex::{Regex, RegexBuilder};

use crate::error::{read_text, AppError, AppResult};

pub const DEFAULT_FILTER_PATTERN: &str = r"inflation|price (?:increase|hike|surge)";

/// Parses line-delimited JSON documents. Blank lines are skipped; errors
/// carry the 1-based line number.
pub fn parse_corpus(text: &str) -> AppResult<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(line).map_err(|e| AppError::Data(format!("corpus line {n}: {e}")))?;
        doc.validate().map_err(|e| AppError::Data(format!("corpus line {n}: {e}")))?;
        if let Some(first) = seen.insert(doc.id.clone(), n) {
            return Err(AppError::Data(format!(
                "corpus line {n}: id {:?} already used on line {first}",
                doc.id
            )));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: &Path) -> AppResult<Vec<Document>> {
    parse_corpus(&read_text(path)?).map_err(|e| match e {
        AppError::Data(m) => AppError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_abbreviations(path: &Path) -> AppResult<Abbreviations> {
    Ok(Abbreviations::parse(&read_text(path)?))
}

/// Case-insensitive relevance filter over sentences.
#[derive(Debug, Clone)]
pub struct FilterPattern {
    regex: Regex,
}

impl FilterPattern {
    pub fn new(pattern: &str) -> AppResult<Self> {
        let regex = RegexBuilder::new(pattern)
            .case_insensitive(true)
            .build()
            .map_err(|e| AppError::Config(format!("invalid filter pattern {pattern:?}: {e}")))?;
        Ok(FilterPattern { regex })
    }

    pub fn as_str(&self) -> &str {
        self.regex.as_str()
    }
}

impl Default for FilterPattern {
    fn default() -> Self {
        FilterPattern::new(DEFAULT_FILTER_PATTERN).expect("default pattern compiles")
    }
}

impl SentenceMatcher for FilterPattern {
    fn is_match(&self, sentence: &str) -> bool {
        self.regex.is_match(&sentence.to_lowercase())
    }
}
