//! Deterministic rule backend. Each planned class is applied once at a
//! uniformly drawn site; every candidate edit is kept only if the splice
//! path recovers it exactly, so `declared_changes` is ground truth.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::{Regex, RegexBuilder};

use crate::inject::{Backend, DeclaredChange, InjectError, InjectionResult};
use crate::lexicon::{match_case, Lexicon};
use crate::report::{join_texts, parse_report, Report};
use crate::sampler::ErrorPlan;
use crate::splice::align::align_texts;
use crate::splice::label::label_mapping;
use crate::splice::neutral::NeutralCues;
use crate::taxonomy::ErrorClass;

const SEED_SALT: u64 = 0x5eed_1e55_ba5e_ca5e;
const TYPO_MIN_LEN: usize = 4;
const TYPOS_PER_WORD: usize = 3;

const NEGATION_TEMPLATES: [&str; 3] = ["No {}.", "No {} is seen.", "There is no {}."];
const PREDICTION_SEVERITIES: [&str; 2] = ["Mild", "Moderate"];

#[derive(Debug, Clone, PartialEq)]
enum Origin {
    Original(usize),
    Modified { original: usize, class: ErrorClass },
    Added { class: ErrorClass },
}

#[derive(Debug, Clone)]
struct Slot {
    text: String,
    origin: Origin,
    explanation: String,
    /// Referenced by an inserted sentence; must stay as written.
    locked: bool,
}

impl Slot {
    fn editable(&self) -> bool {
        !self.locked && matches!(self.origin, Origin::Original(_))
    }
}

#[derive(Debug, Clone)]
enum Edit {
    Replace { slot: usize, text: String, explanation: String },
    Insert { at: usize, text: String, explanation: String, lock: Option<usize> },
}

/// Section header and enumerator at the start of a sentence.
fn prefix_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        RegexBuilder::new(r"^((?:(?:findings|impression)\s*:\s*)*(?:\d+\.\s+)?)")
            .case_insensitive(true)
            .build()
            .unwrap()
    })
}

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[A-Za-z]+\b").unwrap())
}

fn prefix_len(text: &str) -> usize {
    prefix_re().find(text).map_or(0, |m| m.end())
}

fn splice(text: &str, start: usize, end: usize, with: &str) -> String {
    format!("{}{}{}", &text[..start], with, &text[end..])
}

fn hyphen_adjacent(text: &str, start: usize, end: usize) -> bool {
    text[..start].ends_with('-') || text[end..].starts_with('-')
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
}

struct Injector<'a> {
    lex: &'a Lexicon,
    cues: &'a NeutralCues,
    original: Vec<&'a str>,
    slots: Vec<Slot>,
    rng: ChaCha8Rng,
}

impl<'a> Injector<'a> {
    fn texts(&self) -> Vec<&str> {
        self.slots.iter().map(|s| s.text.as_str()).collect()
    }

    fn typo_variants(&mut self, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        let mut out = Vec::new();
        for _ in 0..TYPOS_PER_WORD * 4 {
            if out.len() >= TYPOS_PER_WORD {
                break;
            }
            let i = self.rng.gen_range(1..chars.len());
            let mut c = chars.clone();
            match self.rng.gen_range(0..4) {
                0 => c[i] = self.rng.gen_range(b'a'..=b'z') as char,
                1 => {
                    c.remove(i);
                }
                2 if i + 1 < c.len() => c.swap(i, i + 1),
                2 => c.swap(i - 1, i),
                _ => c.insert(i, self.rng.gen_range(b'a'..=b'z') as char),
            }
            let typo: String = c.into_iter().collect();
            if !typo.eq_ignore_ascii_case(word) && !self.lex.is_known_word(&typo) && !out.contains(&typo) {
                out.push(typo);
            }
        }
        out
    }

    fn word_swaps(
        &self,
        text: &str,
        ranges: &[(usize, usize)],
        alternatives: impl Fn(&str) -> Vec<String>,
    ) -> Vec<String> {
        let skip = prefix_len(text);
        let mut out = Vec::new();
        for &(s, e) in ranges {
            if s < skip || hyphen_adjacent(text, s, e) {
                continue;
            }
            let word = &text[s..e];
            for alt in alternatives(word) {
                if !alt.eq_ignore_ascii_case(word) {
                    out.push(splice(text, s, e, &match_case(&alt, word)));
                }
            }
        }
        out
    }

    /// Candidate replacement texts for one sentence, with an explanation.
    fn modifications(&mut self, class: ErrorClass, text: &str) -> Vec<(String, String)> {
        let lex = self.lex;
        let explained = |new: Vec<String>, what: &str| -> Vec<(String, String)> {
            new.into_iter().map(|t| (t, what.to_string())).collect()
        };
        match class {
            ErrorClass::AddTypo => {
                let skip = prefix_len(text);
                let words: Vec<(usize, usize)> = word_re()
                    .find_iter(text)
                    .filter(|m| m.start() >= skip && m.as_str().chars().count() >= TYPO_MIN_LEN)
                    .filter(|m| m.as_str().chars().skip(1).all(|c| c.is_ascii_lowercase()))
                    .filter(|m| !text[m.end()..].starts_with(':'))
                    .map(|m| (m.start(), m.end()))
                    .collect();
                let mut out = Vec::new();
                for (s, e) in words {
                    let word = text[s..e].to_string();
                    for typo in self.typo_variants(&word) {
                        out.push((splice(text, s, e, &typo), format!("misspelled '{word}' as '{typo}'")));
                    }
                }
                out
            }
            ErrorClass::ChangeToHomophone => {
                let ranges: Vec<(usize, usize)> = word_re().find_iter(text).map(|m| (m.start(), m.end())).collect();
                let alts = |w: &str| {
                    lex.homophones_of(w).map(|v| v.into_iter().map(str::to_string).collect()).unwrap_or_default()
                };
                explained(self.word_swaps(text, &ranges, alts), "replaced a word with a homophone")
            }
            ErrorClass::ChangeMeasurement => {
                let mut out = Vec::new();
                for cap in lex.measurement_re().captures_iter(text) {
                    let (num, unit) = (cap.get(1).unwrap(), cap.get(3).unwrap());
                    for other in lex.units.iter().filter(|u| !u.eq_ignore_ascii_case(unit.as_str())) {
                        let new_unit = match_case(other, unit.as_str());
                        out.push((
                            splice(text, unit.start(), unit.end(), &new_unit),
                            format!("changed unit '{}' to '{new_unit}'", unit.as_str()),
                        ));
                    }
                    let decimals = num.as_str().split_once('.').map_or(0, |(_, d)| d.len());
                    let value: f64 = num.as_str().parse().unwrap_or(0.0);
                    let step = 10f64.powi(-(decimals as i32));
                    for k in [-2.0, -1.0, 1.0, 2.0] {
                        let v = value + k * step;
                        if v <= 0.0 {
                            continue;
                        }
                        let formatted = format!("{v:.decimals$}");
                        if formatted != num.as_str() {
                            out.push((
                                splice(text, num.start(), num.end(), &formatted),
                                format!("changed value '{}' to '{formatted}'", num.as_str()),
                            ));
                        }
                    }
                }
                out
            }
            ErrorClass::ChangeSeverity => {
                let alts = |w: &str| -> Vec<String> { lex.ladder_of(w).map(<[String]>::to_vec).unwrap_or_default() };
                explained(self.word_swaps(text, &lex.severity_hits(text), alts), "changed the severity")
            }
            ErrorClass::ChangeLocation => {
                if lex.is_negative(text) || lex.is_device_sentence(text) {
                    return Vec::new();
                }
                let alts = |w: &str| -> Vec<String> {
                    lex.location_alternatives(w).map(<[String]>::to_vec).unwrap_or_default()
                };
                explained(self.word_swaps(text, &lex.location_hits(text), alts), "changed the location")
            }
            ErrorClass::ChangeNameOfDevice => {
                let hits = lex.device_name_hits(text);
                let mut out = Vec::new();
                for h in hits {
                    let name = &text[h.start..h.end];
                    for alt in &lex.device_names[h.group] {
                        if !alt.eq_ignore_ascii_case(name) {
                            out.push((
                                splice(text, h.start, h.end, &match_case(alt, name)),
                                format!("changed device '{name}' to '{alt}'"),
                            ));
                        }
                    }
                }
                out
            }
            ErrorClass::ChangePositionOfDevice => {
                if !lex.is_device_sentence(text) {
                    return Vec::new();
                }
                let mut out = Vec::new();
                for h in lex.position_hits(text) {
                    let pos = &text[h.start..h.end];
                    for alt in &lex.device_positions[h.group] {
                        if !alt.eq_ignore_ascii_case(pos) {
                            out.push((
                                splice(text, h.start, h.end, &match_case(alt, pos)),
                                format!("moved device from '{pos}' to '{alt}'"),
                            ));
                        }
                    }
                }
                out
            }
            ErrorClass::FalseNegation => {
                if lex.is_negative(text) || lex.is_device_sentence(text) {
                    return Vec::new();
                }
                let prefix = &text[..prefix_len(text)];
                let mut groups: Vec<usize> = lex.finding_hits(text).iter().map(|h| h.group).collect();
                groups.dedup();
                let mut out = Vec::new();
                for g in groups {
                    let finding = lex.findings[g].canonical();
                    for t in NEGATION_TEMPLATES {
                        let body = capitalize(&t.replace("{}", finding));
                        out.push((format!("{prefix}{body}"), format!("negated '{finding}'")));
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    fn positive_sentence(&mut self, finding: usize) -> String {
        let f = &self.lex.findings[finding];
        let sev = PREDICTION_SEVERITIES[self.rng.gen_range(0..PREDICTION_SEVERITIES.len())];
        let side = if f.lateral { ["left ", "right "][self.rng.gen_range(0..2)] } else { "" };
        format!("{sev} {side}{} is present.", f.canonical())
    }

    /// Candidate edits grouped by site, sites in random order.
    fn candidates(&mut self, class: ErrorClass) -> Vec<Vec<Edit>> {
        let n = self.slots.len();
        let mut sites: Vec<Vec<Edit>> = Vec::new();
        match class {
            ErrorClass::FalsePrediction => {
                let all = join_texts(self.texts());
                let unmentioned: Vec<usize> =
                    (0..self.lex.findings.len()).filter(|&g| !self.lex.mentions_finding(&all, g)).collect();
                for g in unmentioned {
                    let text = self.positive_sentence(g);
                    let explanation = format!("added unsupported finding '{}'", self.lex.findings[g].canonical());
                    let mut at: Vec<usize> = (1..=n).collect();
                    at.shuffle(&mut self.rng);
                    sites.push(
                        at.into_iter()
                            .map(|at| Edit::Insert {
                                at,
                                text: text.clone(),
                                explanation: explanation.clone(),
                                lock: None,
                            })
                            .collect(),
                    );
                }
            }
            ErrorClass::AddMedicalDevice => {
                let present: HashSet<&str> = self.slots.iter().map(|s| s.text.as_str()).collect();
                let templates: Vec<String> =
                    self.lex.device_templates.iter().filter(|t| !present.contains(t.as_str())).cloned().collect();
                for text in templates {
                    let mut at: Vec<usize> = (1..=n).collect();
                    at.shuffle(&mut self.rng);
                    sites.push(
                        at.into_iter()
                            .map(|at| Edit::Insert {
                                at,
                                text: text.clone(),
                                explanation: "added a device that is not present".into(),
                                lock: None,
                            })
                            .collect(),
                    );
                }
            }
            ErrorClass::AddOppositeSentence => {
                for i in 0..n {
                    let slot = &self.slots[i];
                    if !slot.editable() || self.lex.is_device_sentence(&slot.text) {
                        continue;
                    }
                    let mut polarities = self.lex.finding_polarities(&slot.text);
                    polarities.dedup();
                    let mut edits = Vec::new();
                    for (g, negated) in polarities {
                        let text = if negated {
                            self.positive_sentence(g)
                        } else {
                            format!("No {} is seen.", self.lex.findings[g].canonical())
                        };
                        edits.push(Edit::Insert {
                            at: n,
                            text,
                            explanation: format!("contradicts sentence {i}"),
                            lock: Some(i),
                        });
                    }
                    if !edits.is_empty() {
                        sites.push(edits);
                    }
                }
            }
            ErrorClass::AddRepetitions => {
                for i in 0..n {
                    let slot = &self.slots[i];
                    let unique = self.slots.iter().filter(|s| s.text == slot.text).count() == 1;
                    if !slot.editable() || !unique || prefix_len(&slot.text) > 0 {
                        continue;
                    }
                    let mut at: Vec<usize> = (i + 1..=n).collect();
                    at.shuffle(&mut self.rng);
                    sites.push(
                        at.into_iter()
                            .map(|at| Edit::Insert {
                                at,
                                text: self.slots[i].text.clone(),
                                explanation: format!("repeats sentence {i}"),
                                lock: Some(i),
                            })
                            .collect(),
                    );
                }
            }
            _ => {
                for i in 0..n {
                    if !self.slots[i].editable() {
                        continue;
                    }
                    let text = self.slots[i].text.clone();
                    let mut edits: Vec<Edit> = self
                        .modifications(class, &text)
                        .into_iter()
                        .filter(|(t, _)| *t != text)
                        .map(|(t, explanation)| Edit::Replace { slot: i, text: t, explanation })
                        .collect();
                    edits.shuffle(&mut self.rng);
                    if !edits.is_empty() {
                        sites.push(edits);
                    }
                }
            }
        }
        sites.shuffle(&mut self.rng);
        sites
    }

    fn apply(&self, class: ErrorClass, edit: &Edit) -> Vec<Slot> {
        let mut slots = self.slots.clone();
        match edit {
            Edit::Replace { slot, text, explanation } => {
                let Origin::Original(original) = slots[*slot].origin else {
                    unreachable!("only original sentences are edited")
                };
                slots[*slot] = Slot {
                    text: text.clone(),
                    origin: Origin::Modified { original, class },
                    explanation: explanation.clone(),
                    locked: true,
                };
            }
            Edit::Insert { at, text, explanation, lock } => {
                if let Some(l) = lock {
                    slots[*l].locked = true;
                }
                slots.insert(
                    *at,
                    Slot {
                        text: text.clone(),
                        origin: Origin::Added { class },
                        explanation: explanation.clone(),
                        locked: true,
                    },
                );
            }
        }
        slots
    }

    /// The splice path must recover every planted change exactly.
    fn recoverable(&self, slots: &[Slot]) -> bool {
        let texts: Vec<&str> = slots.iter().map(|s| s.text.as_str()).collect();
        let distinct: HashSet<&str> = texts.iter().copied().collect();
        let repeats =
            slots.iter().filter(|s| matches!(s.origin, Origin::Added { class: ErrorClass::AddRepetitions })).count();
        if distinct.len() + repeats < texts.len() {
            return false;
        }
        match parse_report(&join_texts(texts.iter().copied()), "check") {
            Ok(r) if r.sentence_texts() == texts => {}
            _ => return false,
        }
        let mapping = align_texts(self.lex, &self.original, &texts);
        if mapping.len() != texts.len() {
            return false;
        }
        let records = label_mapping(self.lex, self.cues, &mapping, &self.original, &texts, None);
        records.iter().zip(&mapping).all(|(rec, m)| {
            let Some(j) = m.error_index else { return false };
            match &slots[j].origin {
                Origin::Original(i) => m.original_index == Some(*i) && rec.error_class == ErrorClass::NotApplicable,
                Origin::Modified { original, class } => {
                    m.original_index == Some(*original) && rec.error_class == *class && !rec.low_confidence
                }
                Origin::Added { class } => m.original_index.is_none() && rec.error_class == *class,
            }
        })
    }

    fn place(&mut self, class: ErrorClass) -> Result<(), InjectError> {
        for site in self.candidates(class) {
            for edit in site {
                let next = self.apply(class, &edit);
                if self.recoverable(&next) {
                    self.slots = next;
                    return Ok(());
                }
            }
        }
        Err(InjectError::NoEligibleSite(class))
    }
}

/// Injects the plan's errors using the built-in lexicon and cues.
pub fn inject_with_rules(report: &Report, plan: &ErrorPlan, seed: u64) -> Result<InjectionResult, InjectError> {
    inject_with_rules_using(Lexicon::builtin(), NeutralCues::builtin(), report, plan, seed)
}

pub fn inject_with_rules_using(
    lex: &Lexicon,
    cues: &NeutralCues,
    report: &Report,
    plan: &ErrorPlan,
    seed: u64,
) -> Result<InjectionResult, InjectError> {
    let original = report.sentence_texts();
    let slots = original
        .iter()
        .enumerate()
        .map(|(i, t)| Slot {
            text: t.to_string(),
            origin: Origin::Original(i),
            explanation: String::new(),
            locked: false,
        })
        .collect();
    let mut inj = Injector { lex, cues, original, slots, rng: ChaCha8Rng::seed_from_u64(seed ^ SEED_SALT) };
    if !inj.recoverable(&inj.slots) {
        return Err(InjectError::Segmentation(format!("report {} does not align with itself", report.id)));
    }
    for class in plan.classes() {
        inj.place(class)?;
    }
    let declared: BTreeMap<usize, DeclaredChange> = inj
        .slots
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let change = match &s.origin {
                Origin::Original(i) => {
                    DeclaredChange { label: 0, error_class: None, explanation: String::new(), original_index: Some(*i) }
                }
                Origin::Modified { original, class } => DeclaredChange {
                    label: 1,
                    error_class: Some(*class),
                    explanation: s.explanation.clone(),
                    original_index: Some(*original),
                },
                Origin::Added { class } => DeclaredChange {
                    label: 1,
                    error_class: Some(*class),
                    explanation: s.explanation.clone(),
                    original_index: None,
                },
            };
            (j, change)
        })
        .collect();
    Ok(InjectionResult {
        error_text: join_texts(inj.texts()),
        declared_changes: Some(declared),
        backend: Backend::Rules,
        plan: *plan,
        flags: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splice::align::align_sentences;

    const NG_REPORT: &str = "Findings: NG tube is coiled in the stomach.  Right PICC in lower SVC is unchanged in position, with the tip located approximately 4.9 cm above the carina.  Cardiac size is normal.  Mild left basilar opacities consistent with atelectasis.  There is no focal consolidation, pleural effusion or pneumothorax. Impression: NG tube in expected position.";

    fn plan(context: ErrorClass, content: ErrorClass, linguistic: ErrorClass) -> ErrorPlan {
        ErrorPlan { content_addition: content, linguistic, context_slot: context, context_fell_back: false, seed: 0 }
    }

    fn changed(result: &InjectionResult) -> Vec<(ErrorClass, Option<usize>)> {
        result
            .declared_changes
            .as_ref()
            .unwrap()
            .values()
            .filter_map(|c| c.error_class.map(|k| (k, c.original_index)))
            .collect()
    }

    #[test]
    fn applies_three_classes() {
        let r = parse_report(NG_REPORT, "ng").unwrap();
        let p = plan(ErrorClass::ChangeMeasurement, ErrorClass::FalseNegation, ErrorClass::AddTypo);
        let res = inject_with_rules(&r, &p, 11).unwrap();
        let mut classes: Vec<ErrorClass> = changed(&res).into_iter().map(|(c, _)| c).collect();
        classes.sort();
        let mut want = vec![ErrorClass::ChangeMeasurement, ErrorClass::FalseNegation, ErrorClass::AddTypo];
        want.sort();
        assert_eq!(classes, want);
        assert_eq!(res.backend, Backend::Rules);
    }

    #[test]
    fn same_seed_same_output() {
        let r = parse_report(NG_REPORT, "ng").unwrap();
        let p = plan(ErrorClass::ChangePositionOfDevice, ErrorClass::AddMedicalDevice, ErrorClass::AddRepetitions);
        let a = inject_with_rules(&r, &p, 5).unwrap();
        let b = inject_with_rules(&r, &p, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn measurement_changes_unit_or_value() {
        let r =
            parse_report("The tip is located approximately 4.9 cm above the carina. The heart size is normal.", "m")
                .unwrap();
        let p = plan(ErrorClass::ChangeMeasurement, ErrorClass::AddMedicalDevice, ErrorClass::AddTypo);
        let re = Lexicon::builtin().measurement_re();
        let mut seen_unit = false;
        for seed in 0..40 {
            let res = inject_with_rules(&r, &p, seed).unwrap();
            let e = parse_report(&res.error_text, "e").unwrap();
            let d = res.declared_changes.unwrap();
            let (j, _) = d.iter().find(|(_, c)| c.error_class == Some(ErrorClass::ChangeMeasurement)).unwrap();
            let cap = re.captures(e.sentence_texts()[*j]).unwrap();
            let value_changed = &cap[1] != "4.9";
            let unit_changed = &cap[3] != "cm";
            assert!(value_changed ^ unit_changed);
            seen_unit |= unit_changed;
        }
        assert!(seen_unit);
    }

    #[test]
    fn missing_device_has_no_site() {
        let r = parse_report("Findings: Mild cardiomegaly. Impression: Stable.", "d").unwrap();
        let p = plan(ErrorClass::ChangeNameOfDevice, ErrorClass::FalsePrediction, ErrorClass::AddTypo);
        assert!(matches!(
            inject_with_rules(&r, &p, 1),
            Err(InjectError::NoEligibleSite(ErrorClass::ChangeNameOfDevice))
        ));
    }

    #[test]
    fn homophone_swap() {
        let r = parse_report(
            "Findings: Single frontal view of the chest provided. There is no focal consolidation, effusion, or pneumothorax.",
            "h",
        )
        .unwrap();
        let p = plan(ErrorClass::FalsePrediction, ErrorClass::AddMedicalDevice, ErrorClass::ChangeToHomophone);
        let found = (0..30).any(|s| {
            inject_with_rules(&r, &p, s)
                .map(|res| res.error_text.contains("There is know focal consolidation"))
                .unwrap_or(false)
        });
        assert!(found);
    }

    #[test]
    fn repetition_is_later_copy() {
        let r = parse_report(NG_REPORT, "ng").unwrap();
        let p = plan(ErrorClass::ChangeSeverity, ErrorClass::FalsePrediction, ErrorClass::AddRepetitions);
        for seed in 0..20 {
            let res = inject_with_rules(&r, &p, seed).unwrap();
            let e = parse_report(&res.error_text, "e").unwrap();
            let texts = e.sentence_texts();
            let d = res.declared_changes.unwrap();
            let (&j, _) = d.iter().find(|(_, c)| c.error_class == Some(ErrorClass::AddRepetitions)).unwrap();
            let first = texts.iter().position(|t| *t == texts[j]).unwrap();
            assert!(first < j);
        }
    }

    #[test]
    fn negation_strips_details() {
        let r = parse_report("Findings: Mild bibasilar opacities consistent with atelectasis.", "n").unwrap();
        let p = plan(ErrorClass::ChangeSeverity, ErrorClass::FalseNegation, ErrorClass::AddRepetitions);
        let lex = Lexicon::builtin();
        for seed in 0..10 {
            let Ok(res) = inject_with_rules(&r, &p, seed) else { continue };
            let d = res.declared_changes.as_ref().unwrap();
            let e = parse_report(&res.error_text, "e").unwrap();
            for (j, c) in d {
                if c.error_class == Some(ErrorClass::FalseNegation) {
                    let t = e.sentence_texts()[*j];
                    assert!(lex.severity_hits(t).is_empty() && lex.location_hits(t).is_empty(), "{t}");
                }
            }
        }
    }

    #[test]
    fn declared_matches_alignment() {
        let r = parse_report(NG_REPORT, "ng").unwrap();
        let p = plan(ErrorClass::ChangeLocation, ErrorClass::FalsePrediction, ErrorClass::AddOppositeSentence);
        let res = inject_with_rules(&r, &p, 2).unwrap();
        let e = parse_report(&res.error_text, "e").unwrap();
        let m = align_sentences(Lexicon::builtin(), &r, &e);
        let d = res.declared_changes.unwrap();
        for entry in m {
            let j = entry.error_index.unwrap();
            assert_eq!(entry.original_index, d[&j].original_index);
        }
    }
}
