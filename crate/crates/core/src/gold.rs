//! The gold annotation line format.
//!
//! ```text
//! 2004-05-27 | WSJ | China Targets Auto Loans, Speculators
//! overinvestment in the industry - causes - rising car inventories (x)
//! run-up in foreign debt - is caused by - some borrowers switch to cheaper loans
//!
//! 2023-03-03 | WSJ | ...
//! ```
//!
//! A block starts with a `date | outlet | title` header; every following
//! non-blank line is one narrative. Blocks are separated by blank lines.
//! `(x)` after an event marks a narrative without explicit reference to
//! inflation, `{surface|entity}` records a resolved coreference and a
//! trailing `(?)` marks an uncertain annotation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, GoldLineProblem, Result};
use crate::narrative::{Connector, EventPair, GoldCoref, GoldMarkup, RawNarrative, Source};

const CAUSES: &str = " - causes - ";
const CAUSED_BY: &str = " - is caused by - ";
const OUT_OF_SCOPE: &str = " (x)";
const UNCERTAIN: &str = " (?)";

/// Which side of a `{surface|entity}` token to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorefMode {
    Entity,
    Surface,
}

/// Collapses runs of whitespace to single spaces and trims.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace-collapsed text with typographic quotes folded to ASCII.
pub fn normalize_text(s: &str) -> String {
    let folded: String = s
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' => '"',
            other => other,
        })
        .collect();
    collapse_whitespace(&folded)
}

enum Piece<'a> {
    Text(&'a str),
    Coref(GoldCoref),
}

fn scan_corefs(text: &str) -> Result<Vec<Piece<'_>>> {
    let mut pieces = Vec::new();
    let mut rest = text;
    loop {
        let open = rest.find('{');
        let close = rest.find('}');
        match (open, close) {
            (None, None) => {
                if !rest.is_empty() {
                    pieces.push(Piece::Text(rest));
                }
                return Ok(pieces);
            }
            (Some(o), c) if c.is_none_or(|c| c > o) => {
                let inner_end = rest[o + 1..]
                    .find(['{', '}'])
                    .map(|i| i + o + 1)
                    .filter(|&i| rest.as_bytes()[i] == b'}')
                    .ok_or_else(|| Error::UnbalancedBraces(text.to_string()))?;
                if o > 0 {
                    pieces.push(Piece::Text(&rest[..o]));
                }
                let inner = &rest[o + 1..inner_end];
                let coref = match inner.split_once('|') {
                    Some((surface, entity)) => GoldCoref {
                        surface: Some(surface.to_string()),
                        entity: entity.to_string(),
                    },
                    None => GoldCoref {
                        surface: None,
                        entity: inner.to_string(),
                    },
                };
                pieces.push(Piece::Coref(coref));
                rest = &rest[inner_end + 1..];
            }
            _ => return Err(Error::UnbalancedBraces(text.to_string())),
        }
    }
}

/// All coreference tokens in `text`, in order.
pub fn parse_corefs(text: &str) -> Result<Vec<GoldCoref>> {
    Ok(scan_corefs(text)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Coref(c) => Some(c),
            Piece::Text(_) => None,
        })
        .collect())
}

/// Replaces every `{surface|entity}` token by one of its sides.
///
/// Entity-only tokens (`{U.S. companies}`) resolve to the entity in both
/// modes since no surface form was recorded.
pub fn resolve_coref(text: &str, mode: CorefMode) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    for piece in scan_corefs(text)? {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Coref(c) => match (mode, c.surface) {
                (CorefMode::Surface, Some(surface)) => out.push_str(&surface),
                _ => out.push_str(&c.entity),
            },
        }
    }
    Ok(out)
}

fn strip_marker<'a>(s: &'a str, marker: &str) -> (&'a str, bool) {
    match s.strip_suffix(marker) {
        Some(rest) => (rest, true),
        None => (s, false),
    }
}

/// Parses one narrative line. The returned narrative has empty `id` and
/// `doc_id`; callers attach them with [`RawNarrative::with_ids`].
pub fn parse_gold_line(line: &str) -> Result<RawNarrative> {
    let normalized = collapse_whitespace(line);
    let err = |problem| Error::GoldLine {
        problem,
        text: line.to_string(),
    };

    let (body, uncertain) = strip_marker(&normalized, UNCERTAIN);
    let mut found: Vec<(usize, Connector, usize)> = Vec::new();
    for (sep, connector) in [(CAUSES, Connector::Causes), (CAUSED_BY, Connector::CausedBy)] {
        found.extend(body.match_indices(sep).map(|(i, _)| (i, connector, sep.len())));
    }
    let (at, connector, sep_len) = match found.as_slice() {
        [] => return Err(err(GoldLineProblem::NoConnector)),
        [one] => *one,
        _ => return Err(err(GoldLineProblem::MultipleConnectors)),
    };

    let (event_a, a_marked) = strip_marker(&body[..at], OUT_OF_SCOPE);
    let (event_b, b_marked) = strip_marker(&body[at + sep_len..], OUT_OF_SCOPE);
    let pair = EventPair::new(event_a, connector, event_b).map_err(|_| err(GoldLineProblem::EmptyEvent))?;

    let mut corefs = parse_corefs(&pair.event_a)?;
    corefs.extend(parse_corefs(&pair.event_b)?);

    Ok(RawNarrative {
        id: String::new(),
        doc_id: String::new(),
        excerpt_span: None,
        pair,
        trace: None,
        inflation_scope: !(a_marked || b_marked),
        source: Source::Gold,
        markup: Some(GoldMarkup {
            a_marked,
            b_marked,
            uncertain,
            corefs,
        }),
        derived_from: None,
    })
}

/// Renders a narrative as a gold line; inverse of [`parse_gold_line`] on
/// whitespace-normalized input.
///
/// Narratives without gold markup get a trailing `(x)` when they are out of
/// inflation scope.
pub fn render_gold_line(n: &RawNarrative) -> Result<String> {
    let pair = &n.pair;
    if pair.event_a.trim().is_empty() {
        return Err(Error::EmptyInput("event A"));
    }
    if pair.event_b.trim().is_empty() {
        return Err(Error::EmptyInput("event B"));
    }
    let markup = n.markup.clone().unwrap_or(GoldMarkup {
        b_marked: !n.inflation_scope,
        ..GoldMarkup::default()
    });
    let mut out = collapse_whitespace(&pair.event_a);
    if markup.a_marked {
        out.push_str(OUT_OF_SCOPE);
    }
    out.push_str(" - ");
    out.push_str(pair.connector.gold());
    out.push_str(" - ");
    out.push_str(&collapse_whitespace(&pair.event_b));
    if markup.b_marked {
        out.push_str(OUT_OF_SCOPE);
    }
    if markup.uncertain {
        out.push_str(UNCERTAIN);
    }
    Ok(out)
}

/// One annotated document of a gold (or expert, or model) file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldDocument {
    pub date: NaiveDate,
    pub outlet: String,
    pub title: String,
    pub narratives: Vec<RawNarrative>,
}

impl GoldDocument {
    /// The header as written: `date | outlet | title`.
    pub fn header(&self) -> String {
        alloc::format!("{} | {} | {}", self.date, self.outlet, self.title)
    }
}

fn parse_header(line: &str) -> Result<(NaiveDate, String, String)> {
    let mut parts = line.splitn(3, '|').map(str::trim);
    let (Some(date), Some(outlet), Some(title)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::invalid("document header", alloc::format!("expected `date | outlet | title`, got {line:?}")));
    };
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|e| Error::invalid("document header", alloc::format!("bad date {date:?}: {e}")))?;
    if outlet.is_empty() || title.is_empty() {
        return Err(Error::invalid("document header", alloc::format!("empty outlet or title in {line:?}")));
    }
    Ok((date, outlet.to_string(), title.to_string()))
}

/// Parses a whole annotation file. Narrative ids are `<source tag>-<d>.<n>`
/// with documents and narratives numbered from 1, and `doc_id` is the
/// header text.
/// Lines starting with `#` are comments.
pub fn parse_gold_file(text: &str, source: Source) -> Result<Vec<GoldDocument>> {
    let mut docs: Vec<GoldDocument> = Vec::new();
    let mut in_block = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            in_block = false;
            continue;
        }
        if !in_block {
            let (date, outlet, title) = parse_header(line).map_err(|e| e.at_line(line_no))?;
            docs.push(GoldDocument {
                date,
                outlet,
                title,
                narratives: Vec::new(),
            });
            in_block = true;
            continue;
        }
        let doc_no = docs.len();
        let doc = docs.last_mut().expect("block has a header");
        let header = doc.header();
        let n = doc.narratives.len() + 1;
        let mut narrative = parse_gold_line(line)
            .map_err(|e| e.at_line(line_no))?
            .with_ids(alloc::format!("{}-{doc_no}.{n}", source.tag()), header);
        narrative.source = source;
        doc.narratives.push(narrative);
    }
    Ok(docs)
}

/// Renders documents back into the file format.
pub fn render_gold_file(docs: &[GoldDocument]) -> Result<String> {
    let mut out = String::new();
    for (i, doc) in docs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&doc.header());
        out.push('\n');
        for n in &doc.narratives {
            out.push_str(&render_gold_line(n)?);
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn out_of_scope_marker() {
        let n = parse_gold_line("overinvestment in the industry - causes - rising car inventories (x)").unwrap();
        assert!(!n.inflation_scope);
        assert_eq!(n.pair.connector, Connector::Causes);
        assert_eq!(n.pair.event_b, "rising car inventories");
        assert!(n.markup.as_ref().unwrap().b_marked);
    }

    #[test]
    fn caused_by_in_scope() {
        let n = parse_gold_line(
            "Expectations have been coming down recently for profits at big U.S. companies - is caused by - still-high inflation",
        )
        .unwrap();
        assert_eq!(n.pair.connector, Connector::CausedBy);
        assert!(n.inflation_scope);
        assert_eq!(n.pair.event_b, "still-high inflation");
    }

    #[test]
    fn coref_tokens_are_parsed() {
        let n = parse_gold_line(
            "{He|President Biden} downplayed the probability of a government shutdown - causes - the markets were calmed",
        )
        .unwrap();
        let corefs = &n.markup.unwrap().corefs;
        assert_eq!(
            corefs,
            &vec![GoldCoref {
                surface: Some("He".into()),
                entity: "President Biden".into()
            }]
        );
    }

    #[test]
    fn marker_after_event_a() {
        let line = "{it|Salesforce} gave a stronger-than-expected forecast for upcoming results (x) - is caused by - {it|Salesforce} topped forecasts for profit and revenue last quarter. (x)";
        let n = parse_gold_line(line).unwrap();
        let m = n.markup.as_ref().unwrap();
        assert!(m.a_marked && m.b_marked);
        assert_eq!(n.pair.event_a, "{it|Salesforce} gave a stronger-than-expected forecast for upcoming results");
        assert_eq!(render_gold_line(&n).unwrap(), line);
    }

    #[test]
    fn connector_errors() {
        let e = parse_gold_line("prices rise and people complain").unwrap_err();
        assert!(matches!(e, Error::GoldLine { problem: GoldLineProblem::NoConnector, .. }));
        let e = parse_gold_line("a - causes - b - causes - c").unwrap_err();
        assert!(matches!(e, Error::GoldLine { problem: GoldLineProblem::MultipleConnectors, .. }));
        let e = parse_gold_line("a - causes - b - is caused by - c").unwrap_err();
        assert!(matches!(e, Error::GoldLine { problem: GoldLineProblem::MultipleConnectors, .. }));
        let e = parse_gold_line(" - causes - b").unwrap_err();
        assert!(matches!(e, Error::GoldLine { .. }));
    }

    #[test]
    fn render_normalizes_whitespace() {
        let n = parse_gold_line("  a   thing -  causes  - another\tthing ").unwrap();
        assert_eq!(render_gold_line(&n).unwrap(), "a thing - causes - another thing");
    }

    #[test]
    fn render_rejects_empty_event() {
        let mut n = parse_gold_line("a - causes - b").unwrap();
        n.pair.event_b = String::from("  ");
        assert!(render_gold_line(&n).is_err());
    }

    #[test]
    fn uncertain_marker_round_trips() {
        let line = "price increases stabilized - causes - soft-drink sales rose (x) (?)";
        let n = parse_gold_line(line).unwrap();
        let m = n.markup.as_ref().unwrap();
        assert!(m.uncertain && m.b_marked);
        assert_eq!(n.pair.event_b, "soft-drink sales rose");
        assert_eq!(render_gold_line(&n).unwrap(), line);
    }

    #[test]
    fn resolve_modes() {
        assert_eq!(
            resolve_coref("{it|the brewer} has worked to increase", CorefMode::Entity).unwrap(),
            "the brewer has worked to increase"
        );
        assert_eq!(resolve_coref("{it|the brewer} has worked", CorefMode::Surface).unwrap(), "it has worked");
        assert_eq!(resolve_coref("no braces here", CorefMode::Entity).unwrap(), "no braces here");
        assert_eq!(resolve_coref("{x|y} and {p|q}", CorefMode::Entity).unwrap(), "y and q");
        assert_eq!(resolve_coref("{x|y} and {p|q}", CorefMode::Surface).unwrap(), "x and p");
        assert_eq!(
            resolve_coref("{U.S. companies} posting results", CorefMode::Surface).unwrap(),
            "U.S. companies posting results"
        );
    }

    #[test]
    fn unbalanced_braces() {
        for bad in ["{it|the brewer has", "it} has", "{a{b|c}}", "a } {b|c}"] {
            assert!(matches!(resolve_coref(bad, CorefMode::Entity), Err(Error::UnbalancedBraces(_))), "{bad}");
        }
    }

    #[test]
    fn file_blocks_and_ids() {
        let text = "2004-05-27 | WSJ | China Targets Auto Loans, Speculators\na - causes - b\nc - is caused by - d (x)\n\n2023-03-03 | NYT | Market Gains | Extra\n\n2023-03-04 | NYT | Empty Doc\ne - causes - f\n";
        let docs = parse_gold_file(text, Source::Gold).unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].narratives.len(), 2);
        assert_eq!(docs[0].narratives[1].id, "gold-1.2");
        assert_eq!(docs[0].narratives[1].doc_id, "2004-05-27 | WSJ | China Targets Auto Loans, Speculators");
        assert_eq!(docs[1].title, "Market Gains | Extra");
        assert!(docs[1].narratives.is_empty());
        assert_eq!(docs[2].narratives[0].pair.event_a, "e");
    }

    #[test]
    fn file_errors_name_the_line() {
        let text = "2004-05-27 | WSJ | T\na - causes - b\nbroken line\n";
        match parse_gold_file(text, Source::Gold) {
            Err(Error::AtLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_gold_file("not a header\n", Source::Gold), Err(Error::AtLine { line: 1, .. })));
    }

    #[test]
    fn normalize_folds_quotes() {
        assert_eq!(normalize_text("the  Fed\u{2019}s \u{201C}aggressiveness\u{201D}"), "the Fed's \"aggressiveness\"");
    }
}
