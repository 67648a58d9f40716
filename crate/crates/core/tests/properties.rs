//! Randomized checks of the invariants each stage promises.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use radfault::corpus::synthetic_report;
use radfault::dataset::{
    read_and_validate, write_report_records, write_sentence_records, IndexMapEntry, ReadMode, ReportRecord,
    SentenceDatasetRow, Split,
};
use radfault::inject::{inject_with_rules, Backend, InjectError};
use radfault::lexicon::Lexicon;
use radfault::report::{normalize, parse_report, reassemble};
use radfault::sampler::{enumerate_plans, plan_probability, sample_plan};
use radfault::splice::{align_texts, label_mapping, Label, NeutralCues};
use radfault::tagger::{Tag, TagProfile, TagSet};
use radfault::taxonomy::ErrorClass;

#[rustfmt::skip]
const WORDS: &[&str] = &[
    "lung", "opacity", "stable", "right", "left", "mild", "effusion", "heart", "size", "normal",
    "tube", "seen", "there", "is", "no", "pneumothorax", "basilar", "atelectasis", "unchanged", "line",
];

/// Fragments containing periods that must not end a sentence.
const PROTECTED: &[&str] = &[
    "4.3 cm",
    "___",
    "Dr. Smith",
    "at 10 a.m. today",
    "e.g. effusion",
    "vs. atelectasis",
    "1.2 x 0.8 cm",
    "approx. 2 mm",
];

fn sentence() -> impl Strategy<Value = String> {
    (
        prop::collection::vec(prop::sample::select(WORDS), 1..8),
        prop::option::of(prop::sample::select(PROTECTED)),
        any::<prop::sample::Index>(),
    )
        .prop_map(|(mut words, protected, at)| {
            if let Some(p) = protected {
                let i = at.index(words.len());
                words.insert(i, p);
            }
            let mut s = words.join(" ");
            s[..1].make_ascii_uppercase();
            s + "."
        })
}

fn spacing() -> impl Strategy<Value = &'static str> {
    prop::sample::select(&[" ", "  ", "\n", " \t "][..])
}

fn all_classes() -> Vec<ErrorClass> {
    ErrorClass::CONTENT_ADDITION
        .into_iter()
        .chain(ErrorClass::LINGUISTIC)
        .chain(ErrorClass::CONTEXT_DEPENDENT)
        .collect()
}

fn tag_set() -> impl Strategy<Value = TagSet> {
    prop::sample::select(TagSet::all_subsets())
}

/// Frequencies with at least one tag present; zero marks an absent tag.
fn profile() -> impl Strategy<Value = TagProfile> {
    prop::array::uniform4(prop_oneof![1 => Just(0.0), 4 => 0.01f64..=1.0])
        .prop_filter("some tag present", |f| f.iter().any(|x| *x > 0.0))
        .prop_map(|f| {
            let freq = [0, 1, 2, 3].map(|i| (Tag::ALL[i], f[i]));
            TagProfile::from_frequencies(1000, freq).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn split_then_reassemble_reproduces_normalized_text(
        findings in prop::collection::vec(sentence(), 1..6),
        impression in prop::collection::vec(sentence(), 1..4),
        gaps in prop::collection::vec(spacing(), 12),
    ) {
        let mut raw = String::from("Findings:");
        for (k, s) in findings.iter().enumerate() {
            raw.push_str(gaps[k % gaps.len()]);
            raw.push_str(s);
        }
        raw.push_str(gaps[11]);
        raw.push_str("Impression:");
        for s in &impression {
            raw.push(' ');
            raw.push_str(s);
        }
        let report = parse_report(&raw, "r").unwrap();
        prop_assert_eq!(report.len(), findings.len() + impression.len());
        for (i, s) in report.sentences.iter().enumerate() {
            prop_assert_eq!(s.index, i);
            prop_assert!(!s.text.contains('\n'));
        }
        prop_assert!(report.sentences[0].text.starts_with("Findings:"));
        prop_assert!(report.sentences[findings.len()].text.starts_with("Impression:"));
        prop_assert_eq!(reassemble(&report.sentences).unwrap(), normalize(&raw));
    }

    #[test]
    fn tag_weights_are_normalized_and_favor_rare_tags(profile in profile()) {
        let present: Vec<Tag> = Tag::ALL.into_iter().filter(|t| profile.stat(*t).frequency > 0.0).collect();
        let total: f64 = present.iter().map(|t| profile.normalized_weight(*t)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for a in &present {
            for b in &present {
                let (fa, fb) = (profile.stat(*a).frequency, profile.stat(*b).frequency);
                if fa < fb {
                    prop_assert!(profile.normalized_weight(*a) > profile.normalized_weight(*b));
                }
            }
        }
    }

    #[test]
    fn enumerated_plans_sum_to_one(profile in profile()) {
        for tags in TagSet::all_subsets() {
            let plans = enumerate_plans(&tags, &profile).unwrap();
            let total: f64 = plans.iter().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "{:?}: {}", tags, total);
        }
    }

    #[test]
    fn sampled_plans_respect_categories(tags in tag_set(), profile in profile(), seed in any::<u64>()) {
        let plan = sample_plan(&tags, &profile, seed).unwrap();
        prop_assert_eq!(plan, sample_plan(&tags, &profile, seed).unwrap());
        prop_assert!(ErrorClass::CONTENT_ADDITION.contains(&plan.content_addition));
        prop_assert!(ErrorClass::LINGUISTIC.contains(&plan.linguistic));
        if plan.context_fell_back {
            prop_assert!(!ErrorClass::CONTEXT_DEPENDENT.contains(&plan.context_slot));
        } else {
            let tag = plan.context_slot.required_tag().unwrap();
            prop_assert!(tags.contains(tag) && profile.stat(tag).frequency > 0.0);
        }
        prop_assert!(plan_probability(&plan, &tags, &profile).unwrap() > 0.0);
    }

    #[test]
    fn rule_injection_is_deterministic_and_spliced_back_exactly(tags in tag_set(), seed in any::<u64>()) {
        let text = synthetic_report(&tags, &mut ChaCha8Rng::seed_from_u64(seed));
        let report = parse_report(&text, "r").unwrap();
        let plan = sample_plan(&tags, &TagProfile::uniform(), seed).unwrap();
        let injected = match inject_with_rules(&report, &plan, seed) {
            Ok(r) => r,
            Err(InjectError::NoEligibleSite(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(&injected, &inject_with_rules(&report, &plan, seed).unwrap());

        let error = parse_report(&injected.error_text, "r").unwrap();
        let declared = injected.declared_changes.as_ref().unwrap();
        prop_assert_eq!(declared.keys().copied().collect::<Vec<_>>(), (0..error.len()).collect::<Vec<_>>());
        let originals: Vec<usize> = declared.values().filter_map(|d| d.original_index).collect();
        prop_assert!(originals.windows(2).all(|w| w[0] < w[1]));

        let mapping = align_texts(Lexicon::builtin(), &report.sentence_texts(), &error.sentence_texts());
        for m in &mapping {
            if let Some(e) = m.error_index {
                prop_assert_eq!(m.original_index, declared[&e].original_index, "error sentence {}", e);
            }
        }
    }

    #[test]
    fn alignment_is_monotone_and_conserves_sentences(
        tags in tag_set(),
        seed in any::<u64>(),
        edits in prop::collection::vec((0u8..4, any::<prop::sample::Index>()), 0..5),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let original_text = synthetic_report(&tags, &mut rng);
        let donor_text = synthetic_report(&TagSet::all(), &mut rng);
        let original = parse_report(&original_text, "o").unwrap();
        let donor = parse_report(&donor_text, "d").unwrap();
        let mut error: Vec<String> = original.sentence_texts().iter().map(|s| s.to_string()).collect();
        for (op, at) in edits {
            match op {
                0 if error.len() > 1 => {
                    error.remove(at.index(error.len()));
                }
                1 => {
                    let s = donor.sentence_texts()[at.index(donor.len())].to_string();
                    error.insert(at.index(error.len() + 1), s);
                }
                2 => {
                    let i = at.index(error.len());
                    error[i] = error[i].replacen("e", "ee", 1);
                }
                _ => {
                    let i = at.index(error.len());
                    error.insert(i + 1, error[i].clone());
                }
            }
        }
        let o = original.sentence_texts();
        let e: Vec<&str> = error.iter().map(String::as_str).collect();
        let mapping = align_texts(Lexicon::builtin(), &o, &e);

        let matched: Vec<(usize, usize)> = mapping
            .iter()
            .filter_map(|m| Some((m.original_index?, m.error_index?)))
            .collect();
        prop_assert!(matched.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        let mut seen_o: Vec<usize> = mapping.iter().filter_map(|m| m.original_index).collect();
        let mut seen_e: Vec<usize> = mapping.iter().filter_map(|m| m.error_index).collect();
        seen_o.sort_unstable();
        seen_e.sort_unstable();
        prop_assert_eq!(seen_o, (0..o.len()).collect::<Vec<_>>());
        prop_assert_eq!(seen_e, (0..e.len()).collect::<Vec<_>>());
        prop_assert!(mapping.iter().all(|m| m.original_index.is_some() || m.error_index.is_some()));

        let cues = NeutralCues::builtin();
        for r in label_mapping(Lexicon::builtin(), cues, &mapping, &o, &e, None) {
            let unchanged_plain = matches!(
                (&r.original_sentence, &r.error_sentence),
                (Some(a), Some(b)) if a == b && !cues.is_neutral(b)
            );
            prop_assert_eq!(r.label == Label::Correct, unchanged_plain, "{:?}", r);
            prop_assert_eq!(r.label == Label::Correct, r.error_class == ErrorClass::NotApplicable && r.label != Label::Neutral);
        }
    }
}

/// One valid index-map entry per error sentence, drawn from `picks`.
fn index_map(m: usize, n: usize, picks: &[(u8, usize)]) -> Vec<IndexMapEntry> {
    let classes = all_classes();
    let mut next_original = 0;
    (0..m)
        .map(|j| {
            let (kind, c) = picks[j % picks.len()];
            if kind == 0 || next_original >= n {
                IndexMapEntry {
                    error_index: j,
                    label: Label::Error,
                    error_class: ErrorClass::ADDED[c % ErrorClass::ADDED.len()],
                    original_index: None,
                }
            } else {
                let (label, error_class) = match kind {
                    1 => (Label::Correct, ErrorClass::NotApplicable),
                    2 => (Label::Error, classes[c % classes.len()]),
                    _ => (Label::Neutral, ErrorClass::NotApplicable),
                };
                next_original += 1;
                IndexMapEntry { error_index: j, label, error_class, original_index: Some(next_original - 1) }
            }
        })
        .collect()
}

fn report_record() -> impl Strategy<Value = ReportRecord> {
    (
        "[a-z0-9]{1,12}",
        prop::sample::select(Split::ALL.to_vec()),
        prop::collection::vec(sentence(), 1..6),
        prop::collection::vec(sentence(), 1..7),
        prop::array::uniform3(0usize..12),
        prop::collection::vec((0u8..4, 0usize..12), 1..8),
        any::<u64>(),
        prop::bool::ANY,
    )
        .prop_map(|(id, split, gt, er, cats, picks, plan_seed, llm)| {
            let classes = all_classes();
            ReportRecord {
                index_map: index_map(er.len(), gt.len(), &picks),
                id,
                split,
                ground_truth: gt.join(" "),
                error_report: er.join(" "),
                error_categories: cats.iter().map(|c| classes[*c]).collect(),
                plan_seed,
                backend: if llm { Backend::Llm } else { Backend::Rules },
            }
        })
}

fn sentence_row(report_id: String, index: usize) -> impl Strategy<Value = SentenceDatasetRow> {
    (0u8..5, sentence(), sentence(), 0usize..12).prop_map(move |(kind, a, b, c)| {
        let classes = all_classes();
        let (original_sentence, error_sentence, label, error_class) = match kind {
            0 => (Some(a.clone()), Some(a), Label::Correct, ErrorClass::NotApplicable),
            1 => (Some(a.clone()), Some(a + " x"), Label::Error, classes[c]),
            2 => (None, Some(b), Label::Error, ErrorClass::ADDED[c % ErrorClass::ADDED.len()]),
            3 => (Some(a), None, Label::Error, ErrorClass::FalseNegation),
            _ => (Some(a.clone()), Some(a), Label::Neutral, ErrorClass::NotApplicable),
        };
        SentenceDatasetRow {
            report_id: report_id.clone(),
            index,
            original_sentence,
            error_sentence,
            label,
            error_class,
        }
    })
}

fn sentence_rows() -> impl Strategy<Value = Vec<SentenceDatasetRow>> {
    prop::collection::vec(1usize..6, 1..5).prop_flat_map(|lens| {
        let rows: Vec<_> = lens
            .iter()
            .enumerate()
            .flat_map(|(r, &len)| (0..len).map(move |i| sentence_row(format!("r{r}"), i)))
            .collect();
        rows
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_records_round_trip(records in prop::collection::vec(report_record(), 1..6)) {
        let mut ids = BTreeSet::new();
        let records: Vec<ReportRecord> = records.into_iter().filter(|r| ids.insert(r.id.clone())).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reports.jsonl");
        write_report_records(&records, &path).unwrap();
        let back = read_and_validate::<ReportRecord>(&path, ReadMode::Strict).unwrap();
        prop_assert!(back.violations.is_empty());
        prop_assert_eq!(back.records, records);
    }

    #[test]
    fn sentence_rows_round_trip(rows in sentence_rows()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sentences.jsonl");
        write_sentence_records(&rows, &path).unwrap();
        let back = read_and_validate::<SentenceDatasetRow>(&path, ReadMode::Strict).unwrap();
        prop_assert!(back.violations.is_empty());
        prop_assert_eq!(back.records, rows);
    }
}
