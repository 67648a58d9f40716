//! Report parsing: section detection, sentence segmentation and reassembly.
//!
//! Reports are normalized before splitting: runs of whitespace collapse to a
//! single space and every section marker is preceded by a space. Under that
//! normalization `reassemble(sentences(parse(text)))` reproduces the text
//! byte for byte, because the splitter only ever cuts at a space.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    Findings,
    Impression,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub section: SectionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    /// Source text exactly as received.
    pub raw: String,
    pub sections: Vec<Section>,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("report '{0}' is empty after whitespace normalization")]
    EmptyReport(String),
    #[error("sentence indices are not contiguous: expected {expected}, found {found}")]
    NonContiguousIndices { expected: usize, found: usize },
}

/// Abbreviations that never end a sentence.
const ABBREVIATIONS: &[&str] =
    &["dr.", "drs.", "mr.", "mrs.", "ms.", "prof.", "st.", "vs.", "e.g.", "i.e.", "approx.", "fig."];

const CLOCK_SUFFIXES: &[&str] = &["a.m.", "p.m."];

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(findings|impression)\s*:").unwrap())
}

fn glued_marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)([^\s\w])((?:findings|impression)\s*:)").unwrap())
}

/// Collapses whitespace runs to one space, trims, and separates section
/// markers glued to preceding punctuation.
pub fn normalize(raw: &str) -> String {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    glued_marker_regex().replace_all(&collapsed, "$1 $2").into_owned()
}

fn kind_of(marker: &str) -> SectionKind {
    if marker.to_ascii_lowercase().starts_with("findings") {
        SectionKind::Findings
    } else {
        SectionKind::Impression
    }
}

/// Splits normalized report text into sections at the literal markers.
pub fn detect_sections(normalized: &str) -> Vec<Section> {
    let mut starts: Vec<(usize, SectionKind)> = marker_regex()
        .captures_iter(normalized)
        .map(|c| {
            let m = c.get(0).unwrap();
            (m.start(), kind_of(c.get(1).unwrap().as_str()))
        })
        .collect();

    let mut sections = Vec::new();
    let first = starts.first().map(|(s, _)| *s).unwrap_or(normalized.len());
    let lead = normalized[..first].trim();
    if !lead.is_empty() {
        sections.push(Section { kind: SectionKind::Other, text: lead.to_string() });
    }
    starts.push((normalized.len(), SectionKind::Other));
    let mut pending_header = String::new();
    for pair in starts.windows(2) {
        let (start, kind) = pair[0];
        let (end, _) = pair[1];
        let text = normalized[start..end].trim();
        let body_empty = marker_regex().find(text).map(|m| text[m.end()..].trim().is_empty()).unwrap_or(false);
        if body_empty && end != normalized.len() {
            // A bare marker directly followed by another marker ("Findings:
            // Findings: ...") is kept as a prefix of the next section.
            pending_header.push_str(text);
            pending_header.push(' ');
            continue;
        }
        let mut full = std::mem::take(&mut pending_header);
        full.push_str(text);
        let kind = if full.is_empty() { kind } else { kind_of_prefix(&full, kind) };
        sections.push(Section { kind, text: full });
    }
    sections
}

fn kind_of_prefix(text: &str, fallback: SectionKind) -> SectionKind {
    marker_regex()
        .captures(text)
        .filter(|c| c.get(0).unwrap().start() == 0)
        .map(|c| kind_of(c.get(1).unwrap().as_str()))
        .unwrap_or(fallback)
}

fn is_enumerator(token: &str) -> bool {
    let digits = token.strip_suffix('.').unwrap_or("");
    !digits.is_empty() && digits.len() <= 2 && digits.chars().all(|c| c.is_ascii_digit())
}

fn is_header(token: &str) -> bool {
    let lower = token.to_ascii_lowercase();
    lower == "findings:" || lower == "impression:"
}

fn ends_sentence(token: &str) -> bool {
    let core = token.trim_end_matches(['"', '\'', ')', ']', '”', '’']);
    core.ends_with(['.', '?', '!'])
}

/// Splits one section's normalized text into trimmed sentences.
///
/// A sentence ends at `.`, `?` or `!` followed by a space, except after an
/// abbreviation, after a clock suffix followed by a lower-case word, or
/// after a list enumerator ("1.") that opens its sentence.
pub fn split_sentences(section_text: &str) -> Vec<String> {
    let tokens: Vec<&str> = section_text.split(' ').filter(|t| !t.is_empty()).collect();
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        current.push(token);
        let Some(next) = tokens.get(i + 1) else {
            break;
        };
        if !ends_sentence(token) {
            continue;
        }
        let lower = token.to_ascii_lowercase();
        if ABBREVIATIONS.contains(&lower.as_str()) {
            continue;
        }
        if CLOCK_SUFFIXES.contains(&lower.as_str()) && next.chars().next().is_some_and(|c| !c.is_uppercase()) {
            continue;
        }
        if is_enumerator(token) && current[..current.len() - 1].iter().all(|t| is_header(t)) {
            continue;
        }
        sentences.push(current.join(" "));
        current.clear();
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    sentences
}

/// Parses raw report text into sections and globally indexed sentences.
pub fn parse_report(raw: &str, id: &str) -> Result<Report, ReportError> {
    let normalized = normalize(raw);
    if normalized.is_empty() {
        return Err(ReportError::EmptyReport(id.to_string()));
    }
    let sections = detect_sections(&normalized);
    let mut sentences = Vec::new();
    for section in &sections {
        for text in split_sentences(&section.text) {
            sentences.push(Sentence { index: sentences.len(), text, section: section.kind });
        }
    }
    Ok(Report { id: id.to_string(), raw: raw.to_string(), sections, sentences })
}

/// Joins sentences with single spaces in index order.
pub fn reassemble(sentences: &[Sentence]) -> Result<String, ReportError> {
    for (expected, s) in sentences.iter().enumerate() {
        if s.index != expected {
            return Err(ReportError::NonContiguousIndices { expected, found: s.index });
        }
    }
    Ok(join_texts(sentences.iter().map(|s| s.text.as_str())))
}

pub fn join_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    texts.into_iter().collect::<Vec<_>>().join(" ")
}

impl Report {
    pub fn normalized_text(&self) -> String {
        join_texts(self.sentences.iter().map(|s| s.text.as_str()))
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence_texts(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.text.as_str()).collect()
    }
}
