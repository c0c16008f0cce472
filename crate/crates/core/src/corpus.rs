//! Documents, sentence splitting and excerpt windows.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::narrative::Span;

/// Sentences on each side of a filter match that go into an excerpt.
pub const DEFAULT_WINDOW: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub date: NaiveDate,
    pub outlet: String,
    pub title: String,
    pub body: String,
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::EmptyInput("document id"));
        }
        if self.body.trim().is_empty() {
            return Err(Error::EmptyInput("document body"));
        }
        Ok(())
    }

    /// The `date | outlet | title` header used by gold annotation files.
    pub fn header(&self) -> String {
        alloc::format!("{} | {} | {}", self.date, self.outlet, self.title)
    }
}

/// A window of consecutive sentences around one filter match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excerpt {
    pub doc_id: String,
    pub span: Span,
    pub sentences: Vec<String>,
    /// Position of the matching sentence within `sentences`.
    pub match_index: usize,
}

impl Excerpt {
    pub fn id(&self) -> String {
        alloc::format!("{}@{}-{}", self.doc_id, self.span.start, self.span.end)
    }

    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Tokens that end in a period without ending a sentence (`Jan.`, `U.S.`).
/// Matching is case-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Abbreviations {
    tokens: BTreeSet<String>,
}

impl Abbreviations {
    /// Parses a plain-text list, one token per line. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Self {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl<S: AsRef<str>> FromIterator<S> for Abbreviations {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Abbreviations {
            tokens: iter.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
        }
    }
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{2019}', '\u{201D}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{2018}', '\u{201C}'];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits text into sentences on terminal punctuation followed by
/// whitespace.
///
/// A period does not end a sentence when the token it closes is in the
/// abbreviation list. Closing quotes and brackets after the punctuation stay
/// with the sentence.
pub fn split_sentences(text: &str, abbreviations: &Abbreviations) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();

    while let Some((i, c)) = chars.next() {
        if !is_terminal(c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, next)) = chars.peek() {
            if CLOSERS.contains(&next) {
                end = j + next.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let at_boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if !at_boundary {
            continue;
        }
        if c == '.' && is_abbreviation(&text[start..i + 1], abbreviations) {
            continue;
        }
        push_trimmed(&mut sentences, &text[start..end]);
        start = end;
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

/// `upto_period` ends with the period under consideration.
fn is_abbreviation(upto_period: &str, abbreviations: &Abbreviations) -> bool {
    let token = upto_period
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(OPENERS);
    abbreviations.contains(token)
}

/// Decides whether a sentence is relevant to the corpus filter.
pub trait SentenceMatcher {
    fn is_match(&self, sentence: &str) -> bool;
}

impl<F: Fn(&str) -> bool> SentenceMatcher for F {
    fn is_match(&self, sentence: &str) -> bool {
        self(sentence)
    }
}

/// Ascending indices of the sentences the matcher accepts.
pub fn filter_matches<M: SentenceMatcher + ?Sized>(sentences: &[String], matcher: &M) -> Vec<usize> {
    sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| matcher.is_match(s))
        .map(|(i, _)| i)
        .collect()
}

/// Builds one excerpt per match index, spanning `window` sentences on each
/// side clamped to the document. Overlapping excerpts are all kept; an
/// excerpt whose span equals an earlier one is dropped.
pub fn build_excerpts(doc_id: &str, sentences: &[String], indices: &[usize], window: usize) -> Vec<Excerpt> {
    let n = sentences.len();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &i in indices {
        if i >= n {
            debug_assert!(false, "match index {i} out of range for {n} sentences");
            continue;
        }
        let span = Span {
            start: i.saturating_sub(window),
            end: (i + window).min(n - 1),
        };
        if !seen.insert(span) {
            continue;
        }
        out.push(Excerpt {
            doc_id: doc_id.to_string(),
            span,
            sentences: sentences[span.start..=span.end].to_vec(),
            match_index: i - span.start,
        });
    }
    out
}

/// Splits, filters and windows one document.
pub fn excerpts_for<M: SentenceMatcher + ?Sized>(
    doc: &Document,
    abbreviations: &Abbreviations,
    matcher: &M,
    window: usize,
) -> Vec<Excerpt> {
    let sentences = split_sentences(&doc.body, abbreviations);
    let matches = filter_matches(&sentences, matcher);
    build_excerpts(&doc.id, &sentences, &matches, window)
}
