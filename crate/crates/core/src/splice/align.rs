//! Order-preserving sentence alignment between an original and an error
//! report.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::lexicon::{Lexicon, Slot};
use crate::report::Report;
use crate::splice::similarity::{
    score, similarity_at_least, token_list_similarity, tokens, MATCH_THRESHOLD, SCORE_SCALE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub original_index: Option<usize>,
    pub error_index: Option<usize>,
    pub similarity: f64,
}

impl MappingEntry {
    pub fn is_added(&self) -> bool {
        self.original_index.is_none()
    }

    pub fn is_omitted(&self) -> bool {
        self.error_index.is_none()
    }
}

const RESCUE_SLOTS: [Slot; 5] =
    [Slot::Measurement, Slot::Severity, Slot::Location, Slot::DeviceName, Slot::DevicePosition];

/// Per-sentence data the pair scorer needs, computed once per sentence
/// instead of once per pair.
struct Features<'a> {
    text: &'a str,
    tokens: Vec<String>,
    lower: String,
    negative: bool,
    findings: Vec<usize>,
    /// Lowercased text with one slot masked, if the slot occurs.
    masks: [Option<String>; RESCUE_SLOTS.len()],
}

impl<'a> Features<'a> {
    fn new(lex: &Lexicon, text: &'a str) -> Self {
        let masks = RESCUE_SLOTS.map(|slot| {
            let masked = lex.mask(text, slot);
            (masked != text).then(|| masked.to_lowercase())
        });
        Features {
            text,
            tokens: tokens(text),
            lower: text.to_lowercase(),
            negative: lex.is_negative(text),
            findings: lex.finding_hits(text).iter().map(|h| h.group).collect(),
            masks,
        }
    }

    fn mask_lower(&self, k: usize) -> &str {
        self.masks[k].as_deref().unwrap_or(&self.lower)
    }
}

/// A low-similarity pair that is still one edit of the other: a polarity
/// flip of a shared finding, or a swap inside one lexicon slot.
fn rescued(o: &Features, e: &Features) -> bool {
    if o.negative != e.negative && o.findings.iter().any(|g| e.findings.contains(g)) {
        return true;
    }
    o.masks.iter().enumerate().any(|(k, m)| m.as_deref().is_some_and(|m| m == e.mask_lower(k)))
}

fn similarity(o: &Features, e: &Features) -> f64 {
    if o.text == e.text {
        return 1.0;
    }
    if o.tokens.is_empty() && e.tokens.is_empty() {
        return 0.0;
    }
    token_list_similarity(&o.tokens, &e.tokens)
}

fn score_features(o: &Features, e: &Features) -> Option<i64> {
    if o.text == e.text {
        return Some(SCORE_SCALE as i64);
    }
    // Every length difference costs a whole token, which bounds the
    // similarity from above.
    let (n, m) = (o.tokens.len(), e.tokens.len());
    let bound = 1.0 - n.abs_diff(m) as f64 / n.max(m).max(1) as f64;
    if bound >= MATCH_THRESHOLD {
        if let Some(sim) = similarity_at_least(&o.tokens, &e.tokens, MATCH_THRESHOLD) {
            return Some(score(sim));
        }
    }
    rescued(o, e).then(|| score(MATCH_THRESHOLD))
}

/// Fixed-point alignment score for a pair, or None when the pair may not
/// be aligned.
pub fn pair_score(lex: &Lexicon, original: &str, error: &str) -> Option<i64> {
    score_features(&Features::new(lex, original), &Features::new(lex, error))
}

/// Error sentences that repeat an earlier error sentence more often than
/// the original report does.
fn repetitions(original: &[&str], error: &[&str]) -> Vec<bool> {
    let mut in_original: HashMap<&str, usize> = HashMap::new();
    for s in original {
        *in_original.entry(s.trim()).or_default() += 1;
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    error
        .iter()
        .map(|s| {
            let n = seen.entry(s.trim()).or_default();
            *n += 1;
            *n > in_original.get(s.trim()).copied().unwrap_or(0).max(1)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Match(usize, usize),
    Omit(usize),
    Add(usize),
}

/// Aligns sentence texts. Matched pairs maximize the total score; among
/// equal totals, gaps are preferred at the end of the traceback, which
/// keeps matches on the earliest indices.
pub fn align_texts(lex: &Lexicon, original: &[&str], error: &[&str]) -> Vec<MappingEntry> {
    let repeated = repetitions(original, error);
    let cols: Vec<usize> = (0..error.len()).filter(|&j| !repeated[j]).collect();
    let (n, m) = (original.len(), cols.len());

    let of: Vec<Features> = original.iter().map(|t| Features::new(lex, t)).collect();
    let ef: Vec<Features> = error.iter().map(|t| Features::new(lex, t)).collect();
    let scores: Vec<Vec<Option<i64>>> =
        of.iter().map(|o| cols.iter().map(|&j| score_features(o, &ef[j])).collect()).collect();
    let mut best = vec![vec![0i64; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            let mut v = best[i - 1][j].max(best[i][j - 1]);
            if let Some(s) = scores[i - 1][j - 1] {
                v = v.max(best[i - 1][j - 1] + s);
            }
            best[i][j] = v;
        }
    }

    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && best[i][j] == best[i - 1][j] {
            ops.push(Op::Omit(i - 1));
            i -= 1;
        } else if j > 0 && best[i][j] == best[i][j - 1] {
            ops.push(Op::Add(cols[j - 1]));
            j -= 1;
        } else {
            ops.push(Op::Match(i - 1, cols[j - 1]));
            i -= 1;
            j -= 1;
        }
    }
    ops.reverse();

    for (r, _) in repeated.iter().enumerate().filter(|(_, &rep)| rep) {
        let at = ops.iter().rposition(|op| matches!(op, Op::Match(_, e) | Op::Add(e) if *e < r)).map_or(0, |p| p + 1);
        ops.insert(at, Op::Add(r));
    }

    let mut out = Vec::with_capacity(ops.len());
    let mut run: Vec<Op> = Vec::new();
    let flush = |run: &mut Vec<Op>, out: &mut Vec<MappingEntry>| {
        let mut adds: Vec<usize> =
            run.iter().filter_map(|o| if let Op::Add(e) = o { Some(*e) } else { None }).collect();
        let mut omits: Vec<usize> =
            run.iter().filter_map(|o| if let Op::Omit(o) = o { Some(*o) } else { None }).collect();
        adds.sort_unstable();
        omits.sort_unstable();
        out.extend(adds.into_iter().map(|e| MappingEntry {
            original_index: None,
            error_index: Some(e),
            similarity: 0.0,
        }));
        out.extend(omits.into_iter().map(|o| MappingEntry {
            original_index: Some(o),
            error_index: None,
            similarity: 0.0,
        }));
        run.clear();
    };
    for op in ops {
        match op {
            Op::Match(o, e) => {
                flush(&mut run, &mut out);
                out.push(MappingEntry {
                    original_index: Some(o),
                    error_index: Some(e),
                    similarity: similarity(&of[o], &ef[e]),
                });
            }
            gap => run.push(gap),
        }
    }
    flush(&mut run, &mut out);
    out
}

pub fn align_sentences(lex: &Lexicon, original: &Report, error: &Report) -> Vec<MappingEntry> {
    align_texts(lex, &original.sentence_texts(), &error.sentence_texts())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::parse_report;

    fn pairs(entries: &[MappingEntry]) -> Vec<(Option<usize>, Option<usize>)> {
        entries.iter().map(|e| (e.original_index, e.error_index)).collect()
    }

    #[test]
    fn identical_reports_align_identically() {
        let r = parse_report("Findings: A is here. B is there. Impression: C is fine.", "x").unwrap();
        let m = align_sentences(Lexicon::builtin(), &r, &r);
        assert_eq!(pairs(&m), vec![(Some(0), Some(0)), (Some(1), Some(1)), (Some(2), Some(2))]);
        assert!(m.iter().all(|e| e.similarity == 1.0));
    }

    #[test]
    fn omission_and_addition() {
        let original = parse_report(
            "Findings: NG tube is coiled in the stomach.  Right PICC in lower SVC is unchanged in position.  Cardiac size is normal.  Mild bibasilar opacities consistent with atelectasis, unchanged compared to chest radiograph performed earlier in the same day.  There is no pneumothorax or pleural effusion. Impression: NG tube in expected position with tip coiled in the stomach.  No other interval change since chest radiograph performed earlier on the same day.",
            "o",
        )
        .unwrap();
        let error = parse_report(
            "Findings: NG tube is coiled in the upper part of the duodenum. Right PICC in proximal SVC is unchanged in position. Mild bibasilar opacities consistent with atelectasis, unchanged compared to chest radiograph performed earlier in the same day. There is no pneumothorax or pleural effusion. Impression: NG tube in unexpected position with tip coiled in duodenum. Large bilateral pleural effusions are noted.",
            "e",
        )
        .unwrap();
        assert_eq!((original.len(), error.len()), (7, 6));
        let m = align_sentences(Lexicon::builtin(), &original, &error);
        assert_eq!(
            pairs(&m),
            vec![
                (Some(0), Some(0)),
                (Some(1), Some(1)),
                (Some(2), None),
                (Some(3), Some(2)),
                (Some(4), Some(3)),
                (Some(5), Some(4)),
                (None, Some(5)),
                (Some(6), None),
            ]
        );
    }

    #[test]
    fn repetition_aligns_as_later_addition() {
        let o = ["A is seen.", "No free air below the right hemidiaphragm is seen.", "Impression: Fine."];
        let e = [
            "A is seen.",
            "No free air below the right hemidiaphragm is seen.",
            "No free air below the right hemidiaphragm is seen.",
            "Impression: Fine.",
        ];
        let m = align_texts(Lexicon::builtin(), &o, &e);
        assert_eq!(pairs(&m), vec![(Some(0), Some(0)), (Some(1), Some(1)), (None, Some(2)), (Some(2), Some(3))]);
    }

    #[test]
    fn negation_flip_is_rescued() {
        let o = ["Findings: Severe acute pulmonary edema.", "Heart is normal."];
        let e = ["Findings: No pulmonary edema.", "Heart is normal."];
        let m = align_texts(Lexicon::builtin(), &o, &e);
        assert_eq!(pairs(&m), vec![(Some(0), Some(0)), (Some(1), Some(1))]);
    }

    #[test]
    fn tie_prefers_earlier_error_sentence() {
        let o = ["Heart is normal.", "Mild pulmonary edema."];
        let e = ["Heart is normal.", "No pulmonary edema.", "No pulmonary edema is seen."];
        let m = align_texts(Lexicon::builtin(), &o, &e);
        assert_eq!(pairs(&m)[1], (Some(1), Some(1)));
    }
}
