//! Worked alignment and labeling examples, reproduced by the deterministic
//! splice path.

mod common;

use common::{aligned_pairs, golden};
use radfault::lexicon::Lexicon;
use radfault::report::parse_report;
use radfault::splice::{align_texts, label_mapping, splice_reports, Label, NeutralCues};
use radfault::taxonomy::ErrorClass;

#[test]
fn sentence_labeling_example() {
    let g = golden::labeled_pair();
    let o = parse_report(g.original, "o").unwrap();
    let e = parse_report(g.error, "e").unwrap();
    let out = splice_reports(Lexicon::builtin(), NeutralCues::builtin(), &o, &e, None);
    let got: Vec<(Label, ErrorClass, Option<usize>)> =
        out.records.iter().map(|r| (r.label, r.error_class, r.error_index)).collect();
    assert_eq!(got, g.expected);
    assert!(out.records.iter().all(|r| !r.low_confidence));
}

#[test]
fn alignment_examples() {
    for (original, error, expected) in golden::alignments() {
        let o = parse_report(original, "o").unwrap();
        let e = parse_report(error, "e").unwrap();
        let got = aligned_pairs(&o, &e);
        assert_eq!(got, expected, "\n{original}\n{error}");
    }
}

#[test]
fn alignment_example_sentences_match_the_printed_dictionary() {
    // The printed dictionary carries one key with a trailing space; matching
    // is on trimmed text.
    let (original, _, _) = golden::alignments()[1];
    let o = parse_report(original, "o").unwrap();
    let texts = o.sentence_texts();
    assert_eq!(texts.len(), 7);
    assert!(texts.iter().all(|t| t.trim() == *t));
    assert_eq!(
        texts[3],
        "Mild bibasilar opacities consistent with atelectasis, unchanged compared to chest radiograph performed earlier in the same day."
    );
}

#[test]
fn label_dictionary_example() {
    let (original, error, expected) = golden::label_dictionary();
    let mapping = align_texts(Lexicon::builtin(), &original, &error);
    assert!(mapping.iter().enumerate().all(|(i, m)| m.original_index == Some(i) && m.error_index == Some(i)));
    let records = label_mapping(Lexicon::builtin(), NeutralCues::builtin(), &mapping, &original, &error, None);
    let got: Vec<(Label, ErrorClass)> = records.iter().map(|r| (r.label, r.error_class)).collect();
    assert_eq!(got, expected);
}

#[test]
fn neutral_comparison_keeps_its_change_class() {
    let o = ["Impression: As compared to ___, the lung volumes have slightly decreased."];
    let e = ["Impression: As compared to ___, the lung volumes have significantly increased."];
    let mapping = align_texts(Lexicon::builtin(), &o, &e);
    let r = &label_mapping(Lexicon::builtin(), NeutralCues::builtin(), &mapping, &o, &e, None)[0];
    assert_eq!((r.label, r.error_class), (Label::Neutral, ErrorClass::ChangeSeverity));
}

/// The labels exactly as printed alongside the dictionary example. Four of
/// them contradict the stated rules (a changed sentence labeled 0, comparison
/// sentences labeled 0 or 1), so the deterministic labeler cannot match them.
#[test]
#[ignore = "printed labels contradict the labeling rules; see label_dictionary_example"]
fn label_dictionary_as_printed() {
    let (original, error, _) = golden::label_dictionary();
    let mapping = align_texts(Lexicon::builtin(), &original, &error);
    let records = label_mapping(Lexicon::builtin(), NeutralCues::builtin(), &mapping, &original, &error, None);
    let got: Vec<u8> = records.iter().map(|r| r.label.into()).collect();
    assert_eq!(got, golden::LABEL_DICTIONARY_PRINTED);
}
