//! Word lists shared by the rule injector and the change classifier.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::Deserialize;

pub const DEFAULT_LEXICON: &str = include_str!("../assets/lexicon.toml");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("reading lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing lexicon: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid lexicon: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
struct RawLexicon {
    severity_ladders: Vec<Vec<String>>,
    #[serde(default)]
    severity_extra: Vec<String>,
    location_swaps: BTreeMap<String, Vec<String>>,
    devices: RawDevices,
    homophones: Vec<Vec<String>>,
    units: Vec<String>,
    negation_cues: Vec<String>,
    findings: Vec<Finding>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawDevices {
    names: Vec<Vec<String>>,
    nouns: Vec<String>,
    positions: Vec<Vec<String>>,
    templates: Vec<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Eq)]
pub struct Finding {
    /// Surface forms; the first one is canonical.
    pub forms: Vec<String>,
    /// Whether a laterality word reads naturally in front of it.
    pub lateral: bool,
}

impl Finding {
    pub fn canonical(&self) -> &str {
        &self.forms[0]
    }
}

/// A lexicon phrase located in a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseHit {
    pub start: usize,
    pub end: usize,
    /// Group index for grouped lists, entry index for findings.
    pub group: usize,
}

/// Compiled lexicon.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub severity_ladders: Vec<Vec<String>>,
    pub location_swaps: BTreeMap<String, Vec<String>>,
    pub device_names: Vec<Vec<String>>,
    pub device_positions: Vec<Vec<String>>,
    pub device_templates: Vec<String>,
    pub homophones: Vec<Vec<String>>,
    pub units: Vec<String>,
    pub findings: Vec<Finding>,
    severity_words: HashSet<String>,
    location_words: HashSet<String>,
    known_words: HashSet<String>,
    severity_re: Regex,
    location_re: Regex,
    device_name_re: Regex,
    device_name_groups: Vec<(String, usize)>,
    device_term_re: Regex,
    position_re: Regex,
    position_groups: Vec<(String, usize)>,
    finding_re: Regex,
    finding_groups: Vec<(String, usize)>,
    negation_re: Regex,
    measurement_re: Regex,
}

fn phrase_regex(phrases: &[String]) -> Regex {
    let mut sorted: Vec<&String> = phrases.iter().collect();
    sorted.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    sorted.dedup();
    let alternation = sorted.iter().map(|p| regex::escape(p)).collect::<Vec<_>>().join("|");
    RegexBuilder::new(&format!(r"\b(?:{alternation})\b"))
        .case_insensitive(true)
        .build()
        .expect("escaped phrase list always compiles")
}

fn grouped(groups: &[Vec<String>]) -> Vec<(String, usize)> {
    groups.iter().enumerate().flat_map(|(g, items)| items.iter().map(move |p| (p.to_lowercase(), g))).collect()
}

fn group_of(table: &[(String, usize)], phrase: &str) -> usize {
    let lower = phrase.to_lowercase();
    table.iter().find(|(p, _)| *p == lower).map(|(_, g)| *g).unwrap_or(usize::MAX)
}

fn hits(re: &Regex, table: &[(String, usize)], text: &str) -> Vec<PhraseHit> {
    re.find_iter(text)
        .map(|m| PhraseHit { start: m.start(), end: m.end(), group: group_of(table, m.as_str()) })
        .collect()
}

impl Lexicon {
    pub fn from_toml(source: &str) -> Result<Self, LexiconError> {
        let raw: RawLexicon = toml::from_str(source)?;
        Self::compile(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> &'static Lexicon {
        static LEX: OnceLock<Lexicon> = OnceLock::new();
        LEX.get_or_init(|| Lexicon::from_toml(DEFAULT_LEXICON).expect("bundled lexicon is valid"))
    }

    fn compile(raw: RawLexicon) -> Result<Self, LexiconError> {
        let lower = |v: &[String]| v.iter().map(|s| s.to_lowercase()).collect::<Vec<_>>();
        let severity_ladders: Vec<Vec<String>> = raw.severity_ladders.iter().map(|l| lower(l)).collect();
        if severity_ladders.iter().any(|l| l.len() < 2) {
            return Err(LexiconError::Invalid("severity ladders need two or more words".into()));
        }
        let mut severity_words: HashSet<String> = severity_ladders.iter().flatten().cloned().collect();
        severity_words.extend(lower(&raw.severity_extra));

        let location_swaps: BTreeMap<String, Vec<String>> =
            raw.location_swaps.iter().map(|(k, v)| (k.to_lowercase(), lower(v))).collect();
        let mut location_words: HashSet<String> = location_swaps.keys().cloned().collect();
        location_words.extend(location_swaps.values().flatten().cloned());

        if let Some(w) = severity_words.intersection(&location_words).next() {
            return Err(LexiconError::Invalid(format!("'{w}' is both a severity and a location word")));
        }
        for finding in &raw.findings {
            if finding.forms.is_empty() {
                return Err(LexiconError::Invalid("finding without forms".into()));
            }
            for form in &finding.forms {
                for word in form.to_lowercase().split([' ', '-']) {
                    if severity_words.contains(word) || location_words.contains(word) {
                        return Err(LexiconError::Invalid(format!(
                            "finding form '{form}' contains a detail word '{word}'"
                        )));
                    }
                }
            }
        }

        let homophones: Vec<Vec<String>> = raw.homophones.iter().map(|h| lower(h)).collect();
        let units = lower(&raw.units);
        let device_names = raw.devices.names.clone();
        let device_positions = raw.devices.positions.clone();

        let mut known_words: HashSet<String> = HashSet::new();
        known_words.extend(severity_words.iter().cloned());
        known_words.extend(location_words.iter().cloned());
        known_words.extend(homophones.iter().flatten().cloned());
        known_words.extend(units.iter().cloned());
        for phrase in
            device_names.iter().flatten().chain(device_positions.iter().flatten()).chain(raw.devices.nouns.iter())
        {
            known_words.extend(phrase.to_lowercase().split([' ', '-']).map(str::to_string));
        }

        let all_names: Vec<String> = device_names.iter().flatten().cloned().collect();
        let mut device_terms = all_names.clone();
        device_terms.extend(raw.devices.nouns.iter().cloned());
        let all_positions: Vec<String> = device_positions.iter().flatten().cloned().collect();
        let finding_groups: Vec<(String, usize)> = raw
            .findings
            .iter()
            .enumerate()
            .flat_map(|(i, f)| f.forms.iter().map(move |p| (p.to_lowercase(), i)))
            .collect();
        let all_forms: Vec<String> = finding_groups.iter().map(|(p, _)| p.clone()).collect();
        let severity_list: Vec<String> = severity_words.iter().cloned().collect();
        let location_list: Vec<String> = location_words.iter().cloned().collect();
        let negation_cues = raw.negation_cues.clone();
        let unit_alt = units.iter().map(|u| regex::escape(u)).collect::<Vec<_>>().join("|");

        Ok(Lexicon {
            severity_re: phrase_regex(&severity_list),
            location_re: phrase_regex(&location_list),
            device_name_re: phrase_regex(&all_names),
            device_name_groups: grouped(&device_names),
            device_term_re: phrase_regex(&device_terms),
            position_re: phrase_regex(&all_positions),
            position_groups: grouped(&device_positions),
            finding_re: phrase_regex(&all_forms),
            finding_groups,
            negation_re: phrase_regex(&negation_cues),
            measurement_re: RegexBuilder::new(&format!(r"\b(\d+(?:\.\d+)?)(\s?)({unit_alt})\b"))
                .case_insensitive(true)
                .build()
                .map_err(|e| LexiconError::Invalid(e.to_string()))?,
            severity_ladders,
            location_swaps,
            device_names,
            device_positions,
            device_templates: raw.devices.templates,
            homophones,
            units,
            findings: raw.findings,
            severity_words,
            location_words,
            known_words,
        })
    }

    pub fn is_severity_word(&self, word: &str) -> bool {
        self.severity_words.contains(&word.to_lowercase())
    }

    pub fn is_location_word(&self, word: &str) -> bool {
        self.location_words.contains(&word.to_lowercase())
    }

    /// Any word the lexicon knows; used to tell typos from real substitutions.
    pub fn is_known_word(&self, word: &str) -> bool {
        self.known_words.contains(&word.to_lowercase())
    }

    pub fn is_unit(&self, word: &str) -> bool {
        self.units.iter().any(|u| u.eq_ignore_ascii_case(word))
    }

    pub fn ladder_of(&self, word: &str) -> Option<&[String]> {
        let lower = word.to_lowercase();
        self.severity_ladders.iter().find(|l| l.contains(&lower)).map(Vec::as_slice)
    }

    pub fn location_alternatives(&self, word: &str) -> Option<&[String]> {
        self.location_swaps.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn homophones_of(&self, word: &str) -> Option<Vec<&str>> {
        let lower = word.to_lowercase();
        self.homophones
            .iter()
            .find(|set| set.contains(&lower))
            .map(|set| set.iter().filter(|w| **w != lower).map(String::as_str).collect())
    }

    pub fn are_homophones(&self, a: &str, b: &str) -> bool {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        a != b && self.homophones.iter().any(|set| set.contains(&a) && set.contains(&b))
    }

    /// Byte ranges of severity words.
    pub fn severity_hits(&self, text: &str) -> Vec<(usize, usize)> {
        self.severity_re.find_iter(text).map(|m| (m.start(), m.end())).collect()
    }

    /// Byte ranges of location words.
    pub fn location_hits(&self, text: &str) -> Vec<(usize, usize)> {
        self.location_re.find_iter(text).map(|m| (m.start(), m.end())).collect()
    }

    pub fn device_name_hits(&self, text: &str) -> Vec<PhraseHit> {
        hits(&self.device_name_re, &self.device_name_groups, text)
    }

    pub fn position_hits(&self, text: &str) -> Vec<PhraseHit> {
        hits(&self.position_re, &self.position_groups, text)
    }

    pub fn finding_hits(&self, text: &str) -> Vec<PhraseHit> {
        hits(&self.finding_re, &self.finding_groups, text)
    }

    pub fn measurement_re(&self) -> &Regex {
        &self.measurement_re
    }

    /// Mentions a device name or a generic device noun.
    pub fn is_device_sentence(&self, text: &str) -> bool {
        self.device_term_re.is_match(text)
    }

    pub fn mentions_device_name(&self, text: &str) -> bool {
        self.device_name_re.is_match(text)
    }

    /// Contains any negation cue.
    pub fn is_negative(&self, text: &str) -> bool {
        self.negation_re.is_match(text)
    }

    /// Findings mentioned in `text` with whether a negation cue precedes
    /// each mention.
    pub fn finding_polarities(&self, text: &str) -> Vec<(usize, bool)> {
        let first_neg = self.negation_re.find(text).map(|m| m.start());
        self.finding_hits(text).into_iter().map(|h| (h.group, first_neg.is_some_and(|n| n < h.start))).collect()
    }

    pub fn mentions_finding(&self, text: &str, finding: usize) -> bool {
        self.finding_hits(text).iter().any(|h| h.group == finding)
    }

    /// Replaces every match of the lexicon slot with a placeholder token.
    pub fn mask(&self, text: &str, slot: Slot) -> String {
        let (re, token) = match slot {
            Slot::Severity => (&self.severity_re, "<sev>"),
            Slot::Location => (&self.location_re, "<loc>"),
            Slot::DeviceName => (&self.device_name_re, "<dev>"),
            Slot::DevicePosition => (&self.position_re, "<pos>"),
            Slot::Measurement => (&self.measurement_re, "<meas>"),
        };
        re.replace_all(text, token).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Severity,
    Location,
    DeviceName,
    DevicePosition,
    Measurement,
}

/// Applies the case shape of `like` (all caps, capitalized, lower) to `word`.
pub fn match_case(word: &str, like: &str) -> String {
    let letters: Vec<char> = like.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) && word.chars().count() > 1 {
        let mostly_caps = word.chars().filter(|c| c.is_alphabetic()).all(|c| c.is_uppercase());
        if !mostly_caps && like.len() <= 4 {
            // Acronym replaced by a phrase: keep the phrase as written.
            return word.to_string();
        }
        return word.to_uppercase();
    }
    if like.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = word.chars();
        return match chars.next() {
            Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
            None => String::new(),
        };
    }
    if word.chars().any(char::is_uppercase) {
        return word.to_string();
    }
    word.to_lowercase()
}
