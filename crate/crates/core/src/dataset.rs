//! Report-level and sentence-level dataset files.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::inject::Backend;
use crate::report::parse_report;
use crate::splice::label::{Label, SentenceRecord};
use crate::taxonomy::ErrorClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" | "val" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

/// Label, class and original index for one error-report sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMapEntry {
    pub error_index: usize,
    pub label: Label,
    pub error_class: ErrorClass,
    pub original_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub id: String,
    pub split: Split,
    pub ground_truth: String,
    pub error_report: String,
    pub error_categories: Vec<ErrorClass>,
    pub index_map: Vec<IndexMapEntry>,
    pub plan_seed: u64,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceDatasetRow {
    pub report_id: String,
    pub index: usize,
    pub original_sentence: Option<String>,
    pub error_sentence: Option<String>,
    pub label: Label,
    pub error_class: ErrorClass,
}

impl SentenceDatasetRow {
    pub fn from_record(report_id: &str, r: &SentenceRecord) -> Self {
        SentenceDatasetRow {
            report_id: report_id.to_string(),
            index: r.index,
            original_sentence: r.original_sentence.clone(),
            error_sentence: r.error_sentence.clone(),
            label: r.label,
            error_class: r.error_class,
        }
    }
}

/// Index map of a report record, one entry per error-report sentence.
pub fn index_map(records: &[SentenceRecord]) -> Vec<IndexMapEntry> {
    let mut out: Vec<IndexMapEntry> = records
        .iter()
        .filter_map(|r| {
            Some(IndexMapEntry {
                error_index: r.error_index?,
                label: r.label,
                error_class: r.error_class,
                original_index: r.original_index,
            })
        })
        .collect();
    out.sort_by_key(|e| e.error_index);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Record position (0-based) when writing, line number (1-based) when
    /// reading.
    pub at: usize,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation at record {index}: {reason}")]
    SchemaViolation { index: usize, reason: String },
    #[error("{} invalid line(s); first: line {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("CSV export failed: {0}")]
    Csv(#[from] csv::Error),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

/// A dataset row type with per-record and cross-record checks.
pub trait Schema: Serialize + DeserializeOwned {
    fn check(&self) -> Vec<String>;

    /// Checks spanning records; returns (position, reason).
    fn check_all(records: &[Self]) -> Vec<(usize, String)> {
        records.iter().enumerate().flat_map(|(i, r)| r.check().into_iter().map(move |v| (i, v))).collect()
    }
}

fn class_label_rules(label: Label, class: ErrorClass, out: &mut Vec<String>) {
    match label {
        Label::Correct if class != ErrorClass::NotApplicable => {
            out.push(format!("label 0 with class {class}"));
        }
        Label::Error if class == ErrorClass::NotApplicable => {
            out.push("label 1 with class NotApplicable".into());
        }
        _ => {}
    }
}

impl Schema for ReportRecord {
    fn check(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.id.trim().is_empty() {
            v.push("empty id".into());
        }
        if self.error_categories.len() != 3 {
            v.push(format!("expected 3 error categories, got {}", self.error_categories.len()));
        }
        if let Some(c) = self.error_categories.iter().find(|c| **c == ErrorClass::NotApplicable) {
            v.push(format!("{c} is not an injectable category"));
        }
        let n = match parse_report(&self.ground_truth, &self.id) {
            Ok(r) => r.len(),
            Err(e) => {
                v.push(format!("ground truth: {e}"));
                return v;
            }
        };
        let m = match parse_report(&self.error_report, &self.id) {
            Ok(r) => r.len(),
            Err(e) => {
                v.push(format!("error report: {e}"));
                return v;
            }
        };
        let indices: Vec<usize> = self.index_map.iter().map(|e| e.error_index).collect();
        if indices != (0..m).collect::<Vec<_>>() {
            v.push(format!("index_map must cover error sentences 0..{m} once, in order"));
        }
        let mut seen_original = HashSet::new();
        for e in &self.index_map {
            class_label_rules(e.label, e.error_class, &mut v);
            match e.original_index {
                Some(i) if i >= n => v.push(format!("original index {i} out of range")),
                Some(i) if !seen_original.insert(i) => v.push(format!("original index {i} repeated")),
                None if !ErrorClass::ADDED.contains(&e.error_class) || e.label != Label::Error => {
                    v.push(format!("added sentence {} must be label 1 with an added-sentence class", e.error_index))
                }
                _ => {}
            }
        }
        v
    }

    fn check_all(records: &[Self]) -> Vec<(usize, String)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (i, r) in records.iter().enumerate() {
            out.extend(r.check().into_iter().map(|v| (i, v)));
            if !seen.insert(r.id.as_str()) {
                out.push((i, format!("duplicate report id {}", r.id)));
            }
        }
        out
    }
}

impl Schema for SentenceDatasetRow {
    fn check(&self) -> Vec<String> {
        let mut v = Vec::new();
        class_label_rules(self.label, self.error_class, &mut v);
        match (&self.original_sentence, &self.error_sentence) {
            (None, None) => v.push("both sentences are null".into()),
            (Some(o), Some(e)) => {
                if self.label == Label::Correct && o != e {
                    v.push("label 0 with differing sentences".into());
                }
                if o == e && self.label == Label::Error {
                    v.push("label 1 with identical sentences".into());
                }
                if o == e && self.error_class != ErrorClass::NotApplicable {
                    v.push("unchanged sentence with an error class".into());
                }
            }
            (None, Some(_)) => {
                if !ErrorClass::ADDED.contains(&self.error_class) || self.label != Label::Error {
                    v.push("added sentence must be label 1 with an added-sentence class".into());
                }
            }
            (Some(_), None) => {
                if self.error_class != ErrorClass::FalseNegation || self.label != Label::Error {
                    v.push("omitted sentence must be label 1 FalseNegation".into());
                }
            }
        }
        v
    }

    fn check_all(records: &[Self]) -> Vec<(usize, String)> {
        let mut out: Vec<(usize, String)> =
            records.iter().enumerate().flat_map(|(i, r)| r.check().into_iter().map(move |v| (i, v))).collect();
        let mut next: BTreeMap<&str, usize> = BTreeMap::new();
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert((r.report_id.as_str(), r.index)) {
                out.push((i, format!("duplicate ({}, {})", r.report_id, r.index)));
                continue;
            }
            let expected = next.entry(r.report_id.as_str()).or_insert(0);
            if r.index != *expected {
                out.push((i, format!("index {} of {} out of order, expected {expected}", r.index, r.report_id)));
            }
            *expected = r.index + 1;
        }
        out.sort_by_key(|(i, _)| *i);
        out
    }
}

fn write_jsonl<T: Schema>(records: &[T], path: &Path) -> Result<usize, DatasetError> {
    if let Some((index, reason)) = T::check_all(records).into_iter().next() {
        return Err(DatasetError::SchemaViolation { index, reason });
    }
    let file = File::create(path).map_err(io(path))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| DatasetError::Io { path: path.display().to_string(), source: std::io::Error::other(e) })?;
        out.write_all(line.as_bytes()).map_err(io(path))?;
        out.write_all(b"\n").map_err(io(path))?;
    }
    let file =
        out.into_inner().map_err(|e| DatasetError::Io { path: path.display().to_string(), source: e.into_error() })?;
    file.sync_all().map_err(io(path))?;
    Ok(records.len())
}

pub fn write_report_records(records: &[ReportRecord], path: &Path) -> Result<usize, DatasetError> {
    write_jsonl(records, path)
}

pub fn write_sentence_records(rows: &[SentenceDatasetRow], path: &Path) -> Result<usize, DatasetError> {
    write_jsonl(rows, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    /// Any violation fails the whole read.
    #[default]
    Strict,
    /// Return valid records alongside the violations.
    Permissive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutcome<T> {
    pub records: Vec<T>,
    pub violations: Vec<Violation>,
}

/// Parses and checks every line. Violations carry 1-based line numbers.
pub fn read_and_validate<T: Schema>(path: &Path, mode: ReadMode) -> Result<ReadOutcome<T>, DatasetError> {
    let file = File::open(path).map_err(io(path))?;
    let mut parsed: Vec<(usize, T)> = Vec::new();
    let mut violations = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(r) => parsed.push((n + 1, r)),
            Err(e) => violations.push(Violation { at: n + 1, reason: e.to_string() }),
        }
    }
    let (lines, records): (Vec<usize>, Vec<T>) = parsed.into_iter().unzip();
    let mut bad = HashSet::new();
    for (i, reason) in T::check_all(&records) {
        bad.insert(i);
        violations.push(Violation { at: lines[i], reason });
    }
    violations.sort_by_key(|v| v.at);
    if mode == ReadMode::Strict && !violations.is_empty() {
        return Err(DatasetError::Invalid(violations));
    }
    let records = records.into_iter().enumerate().filter(|(i, _)| !bad.contains(i)).map(|(_, r)| r).collect();
    Ok(ReadOutcome { records, violations })
}

/// Flat CSV of the sentence table with a header row; nulls become empty
/// cells.
pub fn export_sentence_csv(rows: &[SentenceDatasetRow], path: &Path) -> Result<usize, DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["report_id", "index", "original_sentence", "error_sentence", "label", "error_class"])?;
    for r in rows {
        w.write_record([
            r.report_id.as_str(),
            &r.index.to_string(),
            r.original_sentence.as_deref().unwrap_or(""),
            r.error_sentence.as_deref().unwrap_or(""),
            &r.label.to_string(),
            r.error_class.identifier(),
        ])?;
    }
    w.flush().map_err(io(path))?;
    Ok(rows.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub splits: BTreeMap<Split, Vec<String>>,
    pub corpus_hash: String,
    pub run_seed: u64,
    pub tool_version: String,
}

impl SplitManifest {
    pub fn split_of(&self, id: &str) -> Option<Split> {
        self.splits.iter().find(|(_, ids)| ids.iter().any(|i| i == id)).map(|(s, _)| *s)
    }

    pub fn check(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut v = Vec::new();
        for ids in self.splits.values() {
            for id in ids {
                if !seen.insert(id.as_str()) {
                    v.push(format!("report {id} is in more than one split"));
                }
            }
        }
        v
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| DatasetError::Io { path: path.display().to_string(), source: std::io::Error::other(e) })?;
        std::fs::write(path, text + "\n").map_err(io(path))
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        let m: SplitManifest = serde_json::from_str(&text)
            .map_err(|e| DatasetError::Invalid(vec![Violation { at: e.line(), reason: e.to_string() }]))?;
        let problems = m.check();
        if !problems.is_empty() {
            return Err(DatasetError::Invalid(
                problems.into_iter().map(|reason| Violation { at: 0, reason }).collect(),
            ));
        }
        Ok(m)
    }
}
