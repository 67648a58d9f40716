//! Corpus loading and designed synthetic corpora.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tagger::{Tag, TagSet};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus {0} contains no reports")]
    Empty(String),
    #[error("duplicate report id '{0}'")]
    DuplicateId(String),
}

/// One report as read from disk. A problem with a single entry is kept
/// with the entry so the pipeline can count it as failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: String,
    pub text: Result<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReport {
    pub id: String,
    pub text: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

/// Reads a directory of `.txt` files (id = file stem) or a JSONL file of
/// `{id, text}` objects. Entries come back sorted by id.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut entries = if path.is_dir() {
        let mut out = Vec::new();
        for item in fs::read_dir(path).map_err(io_err(path))? {
            let p = item.map_err(io_err(path))?.path();
            if p.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let text = fs::read(&p)
                .map_err(io_err(&p))
                .map(|bytes| String::from_utf8(bytes).map_err(|e| format!("not UTF-8: {e}")))?;
            out.push(CorpusEntry { id, text });
        }
        out
    } else {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut out = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RawReport>(&line) {
                Ok(r) => out.push(CorpusEntry { id: r.id, text: Ok(r.text) }),
                Err(e) => {
                    out.push(CorpusEntry { id: format!("line-{}", n + 1), text: Err(format!("line {}: {e}", n + 1)) })
                }
            }
        }
        out
    };
    if entries.is_empty() {
        return Err(CorpusError::Empty(path.display().to_string()));
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CorpusError::DuplicateId(w[0].id.clone()));
    }
    Ok(entries)
}

pub fn write_jsonl_corpus(path: &Path, reports: &[RawReport]) -> std::io::Result<()> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).map_err(std::io::Error::other)?);
        out.push('\n');
    }
    fs::write(path, out)
}

// Sentence banks for designed corpora. Each bank's sentences carry exactly
// one context tag under the bundled keyword configuration, or none.
const DEVICE: &[&str] = &[
    "A PICC line terminates at the cavoatrial junction.",
    "The NG tube is coiled in the stomach.",
    "The ET tube terminates in the mid trachea.",
    "A central venous catheter ends in the proximal SVC.",
    "A pacemaker is noted with a lead in the coronary sinus.",
];
const MEASUREMENT: &[&str] = &[
    "There is a 1.2 cm nodule.",
    "A calcified granuloma measures 7 mm.",
    "A 2.5 cm mass is noted.",
    "A nodule measuring 4 mm is again identified.",
];
const SEVERITY: &[&str] = &[
    "Mild cardiomegaly is present.",
    "There is moderate pulmonary edema.",
    "A small hiatal hernia is noted.",
    "Severe emphysema is seen.",
];
const LOCATION: &[&str] = &[
    "There is atelectasis at the left base.",
    "Patchy opacity is seen in the right lung.",
    "Scarring is present in the upper lung.",
    "A rib fracture is noted on the left.",
];
const POSITIVE: &[&str] =
    &["Atelectasis is present.", "Hyperinflation is seen.", "Kyphosis is noted.", "Scarring is again identified."];
const FILLER: &[&str] = &[
    "The heart size is normal.",
    "No pneumothorax is seen.",
    "There is no focal consolidation.",
    "The cardiomediastinal silhouette is within normal limits.",
    "The osseous structures are intact.",
    "Comparison is made to previous study from ___.",
    "There is no pleural effusion.",
];
const IMPRESSION: &[&str] =
    &["No acute cardiopulmonary process.", "No acute intrathoracic process.", "No acute cardiopulmonary abnormality."];

fn bank(tag: Tag) -> &'static [&'static str] {
    match tag {
        Tag::Device => DEVICE,
        Tag::Measurement => MEASUREMENT,
        Tag::Severity => SEVERITY,
        Tag::Location => LOCATION,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, from: &[&'a str], n: usize) -> Vec<&'a str> {
    from.choose_multiple(rng, n).copied().collect()
}

/// A Findings/Impression report whose tag set is exactly `tags`.
pub fn synthetic_report(tags: &TagSet, rng: &mut ChaCha8Rng) -> String {
    let mut findings: Vec<&str> = Vec::new();
    for tag in tags.iter() {
        let n = rng.gen_range(1..=2);
        findings.extend(pick(rng, bank(tag), n));
    }
    findings.extend(pick(rng, POSITIVE, 1));
    let n = rng.gen_range(2..=3);
    findings.extend(pick(rng, FILLER, n));
    findings.shuffle(rng);
    let impression = IMPRESSION[rng.gen_range(0..IMPRESSION.len())];
    format!("Findings: {} Impression: {impression}", findings.join(" "))
}

/// Reports with the given tag sets, `count` of each, ids `{prefix}{n:05}`.
pub fn designed_corpus(design: &[(TagSet, usize)], seed: u64, prefix: &str) -> Vec<RawReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (tags, count) in design {
        for _ in 0..*count {
            let text = synthetic_report(tags, &mut rng);
            out.push(RawReport { id: format!("{prefix}{:05}", out.len()), text });
        }
    }
    out
}
