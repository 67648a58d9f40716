//! Plausibility review of paired original and error reports.
//!
//! Verdicts go to an append-only JSONL log, flushed and synced after every
//! line, so a session can be killed at any point and resumed later.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::ReportRecord;
use crate::taxonomy::ErrorClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Plausible,
    Implausible,
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p" | "plausible" | "y" | "yes" => Ok(Verdict::Plausible),
            "i" | "implausible" | "n" | "no" => Ok(Verdict::Implausible),
            other => Err(format!("unknown verdict '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewVerdict {
    pub report_id: String,
    pub verdict: Verdict,
    pub reviewer: String,
    /// RFC 3339.
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewPair {
    pub report_id: String,
    pub ground_truth: String,
    pub error_report: String,
    pub error_categories: Vec<ErrorClass>,
}

impl From<&ReportRecord> for ReviewPair {
    fn from(r: &ReportRecord) -> Self {
        ReviewPair {
            report_id: r.id.clone(),
            ground_truth: r.ground_truth.clone(),
            error_report: r.error_report.clone(),
            error_categories: r.error_categories.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("nothing to review")]
    NoPairs,
    #[error("session aborted with {persisted} verdicts persisted")]
    AbortedSession { persisted: usize },
    #[error("verdict source: {0}")]
    Source(String),
    #[error("review log {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Supplies one verdict per presented pair. `None` ends the session.
pub trait VerdictSource {
    fn verdict(&mut self, pair: &ReviewPair, rendered: &str) -> Result<Option<Verdict>, ReviewError>;
}

/// Verdicts from a list, consumed in presentation order.
#[derive(Debug, Clone, Default)]
pub struct ScriptedVerdicts {
    queue: std::collections::VecDeque<Verdict>,
    /// Stop (as if killed) after this many verdicts.
    pub stop_after: Option<usize>,
    given: usize,
}

impl ScriptedVerdicts {
    pub fn new(verdicts: impl IntoIterator<Item = Verdict>) -> Self {
        ScriptedVerdicts { queue: verdicts.into_iter().collect(), stop_after: None, given: 0 }
    }

    pub fn stopping_after(mut self, n: usize) -> Self {
        self.stop_after = Some(n);
        self
    }

    /// One verdict per non-empty line; `#` starts a comment.
    pub fn from_path(path: &Path) -> Result<Self, ReviewError> {
        let text =
            fs::read_to_string(path).map_err(|source| ReviewError::Io { path: path.display().to_string(), source })?;
        let verdicts = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.parse().map_err(ReviewError::Source))
            .collect::<Result<Vec<Verdict>, _>>()?;
        Ok(Self::new(verdicts))
    }
}

impl VerdictSource for ScriptedVerdicts {
    fn verdict(&mut self, _pair: &ReviewPair, _rendered: &str) -> Result<Option<Verdict>, ReviewError> {
        if self.stop_after.is_some_and(|n| self.given >= n) {
            return Ok(None);
        }
        let v = self.queue.pop_front();
        if v.is_some() {
            self.given += 1;
        }
        Ok(v)
    }
}

/// Prompts on a terminal (or any reader/writer pair).
pub struct TerminalVerdicts<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> TerminalVerdicts<R, W> {
    pub fn new(input: R, output: W) -> Self {
        TerminalVerdicts { input, output }
    }
}

impl<R: BufRead, W: Write> VerdictSource for TerminalVerdicts<R, W> {
    fn verdict(&mut self, _pair: &ReviewPair, rendered: &str) -> Result<Option<Verdict>, ReviewError> {
        let io_err = |e: io::Error| ReviewError::Source(e.to_string());
        writeln!(self.output, "{rendered}").map_err(io_err)?;
        loop {
            write!(self.output, "[p]lausible / [i]mplausible / [q]uit > ").map_err(io_err)?;
            self.output.flush().map_err(io_err)?;
            let mut line = String::new();
            if self.input.read_line(&mut line).map_err(io_err)? == 0 {
                return Ok(None);
            }
            let answer = line.trim();
            if matches!(answer, "q" | "quit") {
                return Ok(None);
            }
            match answer.parse() {
                Ok(v) => return Ok(Some(v)),
                Err(e) => writeln!(self.output, "{e}").map_err(io_err)?,
            }
        }
    }
}

/// Append-only verdict log.
#[derive(Debug)]
pub struct ReviewLog {
    path: PathBuf,
    file: File,
    verdicts: Vec<ReviewVerdict>,
}

impl ReviewLog {
    /// Opens or creates the log. A partial last line (from a crash mid-write)
    /// is cut off; every complete line is loaded.
    pub fn open(path: &Path) -> Result<Self, ReviewError> {
        let err = |source| ReviewError::Io { path: path.display().to_string(), source };
        let mut verdicts = Vec::new();
        if path.exists() {
            let text = fs::read(path).map_err(err)?;
            let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            if complete < text.len() {
                let f = OpenOptions::new().write(true).open(path).map_err(err)?;
                f.set_len(complete as u64).map_err(err)?;
                f.sync_all().map_err(err)?;
            }
            for line in String::from_utf8_lossy(&text[..complete]).lines() {
                if let Ok(v) = serde_json::from_str::<ReviewVerdict>(line) {
                    verdicts.push(v);
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        Ok(ReviewLog { path: path.to_path_buf(), file, verdicts })
    }

    pub fn verdicts(&self) -> &[ReviewVerdict] {
        &self.verdicts
    }

    pub fn has(&self, report_id: &str, reviewer: &str) -> bool {
        self.verdicts.iter().any(|v| v.report_id == report_id && v.reviewer == reviewer)
    }

    pub fn append(&mut self, verdict: ReviewVerdict) -> Result<(), ReviewError> {
        let err = |source| ReviewError::Io { path: self.path.display().to_string(), source };
        let mut line = serde_json::to_string(&verdict).map_err(|e| err(io::Error::other(e)))?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(err)?;
        self.file.flush().map_err(err)?;
        self.file.sync_data().map_err(err)?;
        self.verdicts.push(verdict);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPlausibility {
    pub class: ErrorClass,
    pub pairs: usize,
    pub plausible: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSummary {
    pub reviewer: String,
    pub judged: usize,
    pub plausible: usize,
    pub fraction: f64,
    pub per_class: Vec<ClassPlausibility>,
}

impl ReviewSummary {
    pub fn render(&self) -> String {
        let mut out = format!("{} of {} judged plausible ({:.2})\n", self.plausible, self.judged, self.fraction);
        for c in &self.per_class {
            out.push_str(&format!(
                "  {:<26}{:>4}/{:<4}{:>8.2}%\n",
                c.class.display_name(),
                c.plausible,
                c.pairs,
                c.percentage
            ));
        }
        out
    }
}

/// Summary over the given pairs of the verdicts `reviewer` has in `log`.
pub fn summarize(pairs: &[ReviewPair], log: &ReviewLog, reviewer: &str) -> ReviewSummary {
    let by_id: HashMap<&str, Verdict> =
        log.verdicts().iter().filter(|v| v.reviewer == reviewer).map(|v| (v.report_id.as_str(), v.verdict)).collect();
    let mut judged = 0;
    let mut plausible = 0;
    let mut per_class: BTreeMap<ErrorClass, (usize, usize)> = BTreeMap::new();
    for pair in pairs {
        let Some(&v) = by_id.get(pair.report_id.as_str()) else {
            continue;
        };
        judged += 1;
        let ok = v == Verdict::Plausible;
        plausible += usize::from(ok);
        for class in &pair.error_categories {
            let e = per_class.entry(*class).or_default();
            e.0 += 1;
            e.1 += usize::from(ok);
        }
    }
    ReviewSummary {
        reviewer: reviewer.to_string(),
        judged,
        plausible,
        fraction: if judged == 0 { 0.0 } else { plausible as f64 / judged as f64 },
        per_class: per_class
            .into_iter()
            .map(|(class, (pairs, plausible))| ClassPlausibility {
                class,
                pairs,
                plausible,
                percentage: 100.0 * plausible as f64 / pairs as f64,
            })
            .collect(),
    }
}

/// Two wrapped columns, original on the left.
pub fn render_side_by_side(pair: &ReviewPair, width: usize) -> String {
    let col = width.saturating_sub(3).max(20) / 2;
    let left = textwrap::wrap(&pair.ground_truth, col);
    let right = textwrap::wrap(&pair.error_report, col);
    let mut out =
        format!("== {} ==\n{:<col$} | {}\n{}\n", pair.report_id, "Original", "Error", "-".repeat(col * 2 + 3));
    for i in 0..left.len().max(right.len()) {
        let l = left.get(i).map_or("", |s| s.as_ref());
        let r = right.get(i).map_or("", |s| s.as_ref());
        out.push_str(format!("{l:<col$} | {r}").trim_end());
        out.push('\n');
    }
    out
}

/// Presents every pair `reviewer` has not judged yet, logging each verdict
/// before asking for the next.
pub fn review_session(
    pairs: &[ReviewPair],
    source: &mut dyn VerdictSource,
    log: &mut ReviewLog,
    reviewer: &str,
) -> Result<ReviewSummary, ReviewError> {
    if pairs.is_empty() {
        return Err(ReviewError::NoPairs);
    }
    for pair in pairs {
        if log.has(&pair.report_id, reviewer) {
            continue;
        }
        let rendered = render_side_by_side(pair, 100);
        match source.verdict(pair, &rendered)? {
            Some(verdict) => log.append(ReviewVerdict {
                report_id: pair.report_id.clone(),
                verdict,
                reviewer: reviewer.to_string(),
                timestamp: chrono::Utc::now().to_rfc3339(),
            })?,
            None => {
                return Err(ReviewError::AbortedSession {
                    persisted: log.verdicts().iter().filter(|v| v.reviewer == reviewer).count(),
                })
            }
        }
    }
    Ok(summarize(pairs, log, reviewer))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(n: usize) -> Vec<ReviewPair> {
        (0..n)
            .map(|i| ReviewPair {
                report_id: format!("r{i:03}"),
                ground_truth: "Findings: No effusion.".into(),
                error_report: "Findings: No efusion.".into(),
                error_categories: vec![ErrorClass::AddTypo, ErrorClass::FalseNegation, ErrorClass::ChangeSeverity],
            })
            .collect()
    }

    #[test]
    fn all_plausible() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = ReviewLog::open(&dir.path().join("v.jsonl")).unwrap();
        let mut src = ScriptedVerdicts::new([Verdict::Plausible; 10]);
        let s = review_session(&pairs(10), &mut src, &mut log, "a").unwrap();
        assert_eq!(s.fraction, 1.0);
        assert_eq!(s.per_class.len(), 3);
        assert!(s.per_class.iter().all(|c| c.percentage == 100.0));
    }

    #[test]
    fn abort_before_any_verdict() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        let mut log = ReviewLog::open(&path).unwrap();
        let mut src = ScriptedVerdicts::new([]);
        let err = review_session(&pairs(3), &mut src, &mut log, "a").unwrap_err();
        assert!(matches!(err, ReviewError::AbortedSession { persisted: 0 }));
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn truncated_tail_is_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        {
            let mut log = ReviewLog::open(&path).unwrap();
            let mut src = ScriptedVerdicts::new([Verdict::Implausible; 2]);
            review_session(&pairs(2), &mut src, &mut log, "a").unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"report_id\":\"r00").unwrap();
        let log = ReviewLog::open(&path).unwrap();
        assert_eq!(log.verdicts().len(), 2);
        assert!(fs::read_to_string(&path).unwrap().ends_with("}\n"));
    }

    #[test]
    fn terminal_source_reads_answers() {
        let input = io::Cursor::new("maybe\np\nq\n");
        let mut out = Vec::new();
        let mut t = TerminalVerdicts::new(input, &mut out);
        let p = &pairs(1)[0];
        assert_eq!(t.verdict(p, "x").unwrap(), Some(Verdict::Plausible));
        assert_eq!(t.verdict(p, "x").unwrap(), None);
        assert!(String::from_utf8(out).unwrap().contains("unknown verdict"));
    }

    #[test]
    fn side_by_side_has_both_columns() {
        let text = render_side_by_side(&pairs(1)[0], 60);
        assert!(text.contains("No effusion.") && text.contains("| Findings: No efusion."));
    }
}
