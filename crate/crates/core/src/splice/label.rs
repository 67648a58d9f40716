//! Sentence labels and error classes from an alignment.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::inject::DeclaredChange;
use crate::lexicon::Lexicon;
use crate::splice::align::MappingEntry;
use crate::splice::classify::{classify_added, classify_change};
use crate::splice::neutral::NeutralCues;
use crate::taxonomy::ErrorClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Correct = 0,
    Error = 1,
    Neutral = 2,
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Label::Correct),
            1 => Ok(Label::Error),
            2 => Ok(Label::Neutral),
            other => Err(format!("label must be 0, 1 or 2, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    /// Position of the record; contiguous from zero.
    pub index: usize,
    pub original_index: Option<usize>,
    pub error_index: Option<usize>,
    pub original_sentence: Option<String>,
    pub error_sentence: Option<String>,
    pub label: Label,
    pub error_class: ErrorClass,
    /// The class is a default rather than a rule match.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
    /// Declared class disagrees with the observed change.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inconsistent: bool,
}

/// Label for a changed sentence: neutral sentences stay neutral unless the
/// change is a surface corruption.
pub fn changed_label(cues: &NeutralCues, error_sentence: &str, class: ErrorClass) -> Label {
    if cues.is_neutral(error_sentence) && !class.is_surface() {
        Label::Neutral
    } else {
        Label::Error
    }
}

pub fn unchanged_label(cues: &NeutralCues, sentence: &str) -> Label {
    if cues.is_neutral(sentence) {
        Label::Neutral
    } else {
        Label::Correct
    }
}

/// Labels every mapping entry. Declared classes, when given, take
/// precedence over classification; disagreements are flagged.
pub fn label_mapping(
    lex: &Lexicon,
    cues: &NeutralCues,
    mapping: &[MappingEntry],
    original: &[&str],
    error: &[&str],
    declared: Option<&BTreeMap<usize, DeclaredChange>>,
) -> Vec<SentenceRecord> {
    let declared_class = |j: usize| -> Option<ErrorClass> {
        declared.and_then(|d| d.get(&j)).filter(|c| c.label == 1).and_then(|c| c.error_class)
    };
    mapping
        .iter()
        .enumerate()
        .map(|(index, entry)| {
            let o = entry.original_index.map(|i| original[i]);
            let e = entry.error_index.map(|j| error[j]);
            let mut low_confidence = false;
            let mut inconsistent = false;
            let (label, error_class) = match (o, e, entry.error_index) {
                (Some(o), Some(e), Some(j)) if o == e => {
                    inconsistent = declared_class(j).is_some();
                    (unchanged_label(cues, e), ErrorClass::NotApplicable)
                }
                (Some(o), Some(e), Some(j)) => {
                    let observed = classify_change(lex, o, e);
                    let class = match declared_class(j) {
                        Some(c) => {
                            inconsistent = c != observed.class;
                            c
                        }
                        None => {
                            low_confidence = observed.low_confidence;
                            observed.class
                        }
                    };
                    (changed_label(cues, e, class), class)
                }
                (None, Some(e), Some(j)) => {
                    let observed = classify_added(lex, e, &error[..j]);
                    let class = match declared_class(j) {
                        Some(c) => {
                            inconsistent = c != observed;
                            c
                        }
                        None => observed,
                    };
                    (Label::Error, class)
                }
                _ => (Label::Error, ErrorClass::FalseNegation),
            };
            SentenceRecord {
                index,
                original_index: entry.original_index,
                error_index: entry.error_index,
                original_sentence: o.map(str::to_string),
                error_sentence: e.map(str::to_string),
                label,
                error_class,
                low_confidence,
                inconsistent,
            }
        })
        .collect()
}
