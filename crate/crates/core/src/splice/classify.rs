//! Deterministic error classification of changed and added sentences.

use crate::lexicon::{Lexicon, Slot};
use crate::splice::similarity::{char_distance, token_diff, tokens};
use crate::taxonomy::ErrorClass;

/// Longest word a dropped or inserted token can have and still count as a
/// typo.
const SHORT_WORD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub class: ErrorClass,
    /// No rule matched; the class is a default.
    pub low_confidence: bool,
}

impl Classification {
    fn sure(class: ErrorClass) -> Self {
        Classification { class, low_confidence: false }
    }
}

fn alphabetic(word: &str) -> bool {
    !word.is_empty() && word.chars().all(char::is_alphabetic)
}

fn masked_equal(lex: &Lexicon, a: &str, b: &str, slot: Slot) -> bool {
    let (ma, mb) = (lex.mask(a, slot), lex.mask(b, slot));
    ma != a && ma.to_lowercase() == mb.to_lowercase()
}

/// Classifies a matched pair whose texts differ.
pub fn classify_change(lex: &Lexicon, original: &str, error: &str) -> Classification {
    let (ta, tb) = (tokens(original), tokens(error));
    let diff = token_diff(&ta, &tb);
    match (diff.removed.as_slice(), diff.inserted.as_slice()) {
        ([old], [new]) => {
            if lex.are_homophones(old, new) {
                return Classification::sure(ErrorClass::ChangeToHomophone);
            }
            if alphabetic(old) && alphabetic(new) && char_distance(old, new) <= 2 && !lex.is_known_word(new) {
                return Classification::sure(ErrorClass::AddTypo);
            }
        }
        ([word], []) | ([], [word])
            if alphabetic(word)
                && word.chars().count() <= SHORT_WORD
                && !lex.is_negative(word)
                && !lex.is_known_word(word) =>
        {
            return Classification::sure(ErrorClass::AddTypo);
        }
        _ => {}
    }
    if masked_equal(lex, original, error, Slot::Measurement) {
        return Classification::sure(ErrorClass::ChangeMeasurement);
    }
    if masked_equal(lex, original, error, Slot::Severity) {
        return Classification::sure(ErrorClass::ChangeSeverity);
    }
    if masked_equal(lex, original, error, Slot::Location) {
        return Classification::sure(ErrorClass::ChangeLocation);
    }
    if masked_equal(lex, original, error, Slot::DeviceName) {
        return Classification::sure(ErrorClass::ChangeNameOfDevice);
    }
    if (lex.is_device_sentence(original) || lex.is_device_sentence(error))
        && masked_equal(lex, original, error, Slot::DevicePosition)
    {
        return Classification::sure(ErrorClass::ChangePositionOfDevice);
    }
    match (lex.is_negative(original), lex.is_negative(error)) {
        (false, true) => Classification::sure(ErrorClass::FalseNegation),
        (true, false) => Classification::sure(ErrorClass::FalsePrediction),
        _ => Classification { class: ErrorClass::FalsePrediction, low_confidence: true },
    }
}

/// Classifies a sentence with no original counterpart, given the
/// error-report sentences that precede it.
pub fn classify_added(lex: &Lexicon, sentence: &str, earlier: &[&str]) -> ErrorClass {
    if earlier.iter().any(|s| s.trim() == sentence.trim()) {
        return ErrorClass::AddRepetitions;
    }
    if lex.is_device_sentence(sentence) {
        return ErrorClass::AddMedicalDevice;
    }
    let mine = lex.finding_polarities(sentence);
    let contradicts = earlier
        .iter()
        .any(|s| lex.finding_polarities(s).iter().any(|(f, neg)| mine.iter().any(|(g, n)| f == g && neg != n)));
    if contradicts {
        return ErrorClass::AddOppositeSentence;
    }
    ErrorClass::FalsePrediction
}
