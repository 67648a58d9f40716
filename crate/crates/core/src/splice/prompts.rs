//! Alignment and labeling prompts, their dictionary formats, and the LLM
//! splice path with deterministic fallback.

use serde::{Deserialize, Serialize};

use crate::inject::llm::LlmClient;
use crate::inject::prompt::TemplateStore;
use crate::inject::Backend;
use crate::lexicon::Lexicon;
use crate::report::Report;
use crate::splice::align::{align_texts, MappingEntry};
use crate::splice::label::{label_mapping, Label, SentenceRecord};
use crate::splice::neutral::NeutralCues;
use crate::splice::pydict::{self, PyValue};
use crate::splice::similarity::sentence_similarity;
use crate::taxonomy::ErrorClass;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpliceParseError {
    #[error(transparent)]
    Syntax(#[from] pydict::PyParseError),
    #[error("expected a dictionary")]
    NotADictionary,
    #[error("entry {0}: {1}")]
    Entry(usize, String),
    #[error("sentence not covered: {0}")]
    Coverage(String),
    #[error("matched pairs are out of order")]
    Order,
}

fn dict_entries(raw: &str) -> Result<Vec<(PyValue, PyValue)>, SpliceParseError> {
    match pydict::parse(raw)? {
        PyValue::Dict(items) => Ok(items),
        _ => Err(SpliceParseError::NotADictionary),
    }
}

pub fn build_splice_prompt(templates: &TemplateStore, original: &Report, error: &Report) -> String {
    format!(
        "{}\n\nOriginal Report: {}\n\nError Report: {}\n\nLength of Original Report: {}\nLength of Error Report: {}",
        templates.splice.trim_end(),
        original.normalized_text(),
        error.normalized_text(),
        original.len(),
        error.len()
    )
}

pub fn build_label_prompt(templates: &TemplateStore, mapping_dict: &str) -> String {
    format!("{}\n\nDictionary: {mapping_dict}", templates.label.trim_end())
}

/// Splice prompt plus a label prompt over the deterministic mapping.
pub fn build_label_prompts(
    lex: &Lexicon,
    templates: &TemplateStore,
    original: &Report,
    error: &Report,
) -> (String, String) {
    let (o, e) = (original.sentence_texts(), error.sentence_texts());
    let mapping = align_texts(lex, &o, &e);
    (
        build_splice_prompt(templates, original, error),
        build_label_prompt(templates, &format_mapping_dict(&mapping, &o, &e)),
    )
}

fn side(index: Option<usize>, texts: &[&str]) -> PyValue {
    PyValue::Str(index.map_or(String::new(), |i| texts[i].to_string()))
}

/// `{original : error}` with empty strings for gaps.
pub fn format_mapping_dict(mapping: &[MappingEntry], original: &[&str], error: &[&str]) -> String {
    let items = mapping.iter().map(|m| (side(m.original_index, original), side(m.error_index, error))).collect();
    pydict::format(&PyValue::Dict(items))
}

/// `{original : [label, class code, error]}`.
pub fn format_label_dict(records: &[SentenceRecord]) -> String {
    let items = records
        .iter()
        .map(|r| {
            let text = |s: &Option<String>| PyValue::Str(s.clone().unwrap_or_default());
            (
                text(&r.original_sentence),
                PyValue::List(vec![
                    PyValue::Int(u8::from(r.label).into()),
                    PyValue::Int(r.error_class.code().into()),
                    text(&r.error_sentence),
                ]),
            )
        })
        .collect();
    pydict::format(&PyValue::Dict(items))
}

/// Index of the first unused sentence equal to `text` after trimming.
fn claim(text: &str, texts: &[&str], used: &mut [bool]) -> Option<usize> {
    let t = text.trim();
    let i = texts.iter().enumerate().position(|(i, s)| !used[i] && s.trim() == t)?;
    used[i] = true;
    Some(i)
}

fn entry_text(v: &PyValue, n: usize) -> Result<&str, SpliceParseError> {
    v.as_str().ok_or_else(|| SpliceParseError::Entry(n, "expected a string".into()))
}

/// Parses a `{original : error}` response into a validated mapping.
pub fn parse_mapping_response(
    raw: &str,
    original: &[&str],
    error: &[&str],
) -> Result<Vec<MappingEntry>, SpliceParseError> {
    let mut used_o = vec![false; original.len()];
    let mut used_e = vec![false; error.len()];
    let mut out = Vec::new();
    for (n, (k, v)) in dict_entries(raw)?.iter().enumerate() {
        let (ko, ve) = (entry_text(k, n)?, entry_text(v, n)?);
        let lookup = |t: &str, texts: &[&str], used: &mut [bool]| -> Result<Option<usize>, SpliceParseError> {
            if t.trim().is_empty() {
                return Ok(None);
            }
            claim(t, texts, used).map(Some).ok_or_else(|| SpliceParseError::Entry(n, format!("unknown sentence '{t}'")))
        };
        let oi = lookup(ko, original, &mut used_o)?;
        let ei = lookup(ve, error, &mut used_e)?;
        if oi.is_none() && ei.is_none() {
            return Err(SpliceParseError::Entry(n, "empty entry".into()));
        }
        let similarity = match (oi, ei) {
            (Some(i), Some(j)) => sentence_similarity(original[i], error[j]),
            _ => 0.0,
        };
        out.push(MappingEntry { original_index: oi, error_index: ei, similarity });
    }
    if let Some(i) = used_o.iter().position(|u| !u) {
        return Err(SpliceParseError::Coverage(original[i].to_string()));
    }
    if let Some(j) = used_e.iter().position(|u| !u) {
        return Err(SpliceParseError::Coverage(error[j].to_string()));
    }
    let pairs: Vec<(usize, usize)> = out.iter().filter_map(|m| Some((m.original_index?, m.error_index?))).collect();
    if pairs.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1) {
        return Err(SpliceParseError::Order);
    }
    Ok(out)
}

/// Parses a `{original : [label, class, error]}` response against the
/// mapping it was asked about.
pub fn parse_label_response(
    raw: &str,
    mapping: &[MappingEntry],
    original: &[&str],
    error: &[&str],
) -> Result<Vec<SentenceRecord>, SpliceParseError> {
    let entries = dict_entries(raw)?;
    if entries.len() != mapping.len() {
        return Err(SpliceParseError::Coverage(format!("expected {} entries, got {}", mapping.len(), entries.len())));
    }
    entries
        .iter()
        .zip(mapping)
        .enumerate()
        .map(|(n, ((k, v), m))| {
            let PyValue::List(parts) = v else {
                return Err(SpliceParseError::Entry(n, "expected [label, class, sentence]".into()));
            };
            let [label, class, sentence] = parts.as_slice() else {
                return Err(SpliceParseError::Entry(n, "expected three fields".into()));
            };
            let want_o = m.original_index.map_or("", |i| original[i]);
            let want_e = m.error_index.map_or("", |j| error[j]);
            if entry_text(k, n)?.trim() != want_o.trim() || entry_text(sentence, n)?.trim() != want_e.trim() {
                return Err(SpliceParseError::Entry(n, "sentence does not match the mapping".into()));
            }
            let label = label
                .as_int()
                .and_then(|l| u8::try_from(l).ok())
                .and_then(|l| Label::try_from(l).ok())
                .ok_or_else(|| SpliceParseError::Entry(n, "label must be 0, 1 or 2".into()))?;
            let class = match class {
                PyValue::Int(c) => u8::try_from(*c).ok().and_then(ErrorClass::from_code),
                PyValue::Str(s) => s.parse().ok(),
                _ => None,
            }
            .ok_or_else(|| SpliceParseError::Entry(n, "unknown error class".into()))?;
            Ok(SentenceRecord {
                index: n,
                original_index: m.original_index,
                error_index: m.error_index,
                original_sentence: m.original_index.map(|i| original[i].to_string()),
                error_sentence: m.error_index.map(|j| error[j].to_string()),
                label,
                error_class: class,
                low_confidence: false,
                inconsistent: false,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpliceOutcome {
    pub mapping: Vec<MappingEntry>,
    pub records: Vec<SentenceRecord>,
    /// Which path produced the records.
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Deterministic alignment and labeling.
pub fn splice_reports(
    lex: &Lexicon,
    cues: &NeutralCues,
    original: &Report,
    error: &Report,
    declared: Option<&std::collections::BTreeMap<usize, crate::inject::DeclaredChange>>,
) -> SpliceOutcome {
    let (o, e) = (original.sentence_texts(), error.sentence_texts());
    let mapping = align_texts(lex, &o, &e);
    let records = label_mapping(lex, cues, &mapping, &o, &e, declared);
    SpliceOutcome { mapping, records, backend: Backend::Rules, flags: Vec::new() }
}

/// Asks the model to align and then label; any failure falls back to the
/// deterministic path with a flag naming the stage.
pub fn splice_with_llm(
    client: &dyn LlmClient,
    templates: &TemplateStore,
    lex: &Lexicon,
    cues: &NeutralCues,
    original: &Report,
    error: &Report,
) -> SpliceOutcome {
    let (o, e) = (original.sentence_texts(), error.sentence_texts());
    let fallback = |stage: &str, why: String| {
        let mut out = splice_reports(lex, cues, original, error, None);
        out.flags.push(format!("{stage} fell back to rules: {why}"));
        out
    };
    let mapping = match client
        .complete(&build_splice_prompt(templates, original, error))
        .map_err(|err| err.to_string())
        .and_then(|raw| parse_mapping_response(&raw, &o, &e).map_err(|err| err.to_string()))
    {
        Ok(m) => m,
        Err(why) => return fallback("alignment", why),
    };
    let prompt = build_label_prompt(templates, &format_mapping_dict(&mapping, &o, &e));
    match client
        .complete(&prompt)
        .map_err(|err| err.to_string())
        .and_then(|raw| parse_label_response(&raw, &mapping, &o, &e).map_err(|err| err.to_string()))
    {
        Ok(records) => SpliceOutcome { mapping, records, backend: Backend::Llm, flags: Vec::new() },
        Err(why) => fallback("labeling", why),
    }
}
