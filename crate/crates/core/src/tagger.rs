//! Report-level context tags and the corpus tag profile.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::report::Report;

pub const DEFAULT_KEYWORDS: &str = include_str!("../assets/keywords.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Device,
    Measurement,
    Location,
    Severity,
}

impl Tag {
    pub const ALL: [Tag; 4] = [Tag::Device, Tag::Measurement, Tag::Location, Tag::Severity];

    /// Number of context-dependent classes that require this tag.
    pub fn error_count(self) -> u32 {
        match self {
            Tag::Device => 2,
            Tag::Measurement | Tag::Location | Tag::Severity => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Device => "device",
            Tag::Measurement => "measurement",
            Tag::Location => "location",
            Tag::Severity => "severity",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown tag '{0}'")]
pub struct UnknownTag(pub String);

impl FromStr for Tag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "device" => Ok(Tag::Device),
            "measurement" => Ok(Tag::Measurement),
            "location" => Ok(Tag::Location),
            "severity" => Ok(Tag::Severity),
            _ => Err(UnknownTag(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSet(BTreeSet<Tag>);

impl TagSet {
    pub fn new() -> Self {
        TagSet::default()
    }

    pub fn all() -> Self {
        Tag::ALL.into_iter().collect()
    }

    pub fn insert(&mut self, tag: Tag) -> bool {
        self.0.insert(tag)
    }

    pub fn contains(&self, tag: Tag) -> bool {
        self.0.contains(&tag)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Tag> + '_ {
        self.0.iter().copied()
    }

    /// All 16 subsets of the four tags.
    pub fn all_subsets() -> Vec<TagSet> {
        (0u8..16)
            .map(|mask| {
                Tag::ALL.into_iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| t).collect()
            })
            .collect()
    }
}

impl FromIterator<Tag> for TagSet {
    fn from_iter<I: IntoIterator<Item = Tag>>(iter: I) -> Self {
        TagSet(iter.into_iter().collect())
    }
}

impl fmt::Display for TagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Tag::as_str).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

impl FromStr for TagSet {
    type Err = UnknownTag;

    /// Comma separated tag names; the empty string is the empty set.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(Tag::from_str).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum KeywordError {
    #[error("reading keyword config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing keyword config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad pattern for tag {tag}: {source}")]
    Pattern {
        tag: Tag,
        #[source]
        source: regex::Error,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
struct RawKeywords {
    #[serde(default)]
    device: Vec<String>,
    #[serde(default)]
    measurement: Vec<String>,
    #[serde(default)]
    location: Vec<String>,
    #[serde(default)]
    severity: Vec<String>,
}

/// Compiled keyword patterns, one list per tag.
#[derive(Debug, Clone)]
pub struct KeywordConfig {
    patterns: [Vec<Regex>; 4],
}

impl KeywordConfig {
    pub fn from_toml(source: &str) -> Result<Self, KeywordError> {
        let raw: RawKeywords = toml::from_str(source)?;
        let compile = |tag: Tag, list: &[String]| -> Result<Vec<Regex>, KeywordError> {
            list.iter()
                .map(|p| {
                    RegexBuilder::new(p)
                        .case_insensitive(true)
                        .build()
                        .map_err(|source| KeywordError::Pattern { tag, source })
                })
                .collect()
        };
        Ok(KeywordConfig {
            patterns: [
                compile(Tag::Device, &raw.device)?,
                compile(Tag::Measurement, &raw.measurement)?,
                compile(Tag::Location, &raw.location)?,
                compile(Tag::Severity, &raw.severity)?,
            ],
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, KeywordError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| KeywordError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn patterns(&self, tag: Tag) -> &[Regex] {
        &self.patterns[tag.slot()]
    }

    pub fn matches(&self, tag: Tag, text: &str) -> bool {
        self.patterns(tag).iter().any(|re| re.is_match(text))
    }
}

impl Default for KeywordConfig {
    fn default() -> Self {
        KeywordConfig::from_toml(DEFAULT_KEYWORDS).expect("bundled keyword config is valid")
    }
}

/// Tags whose patterns match at least one sentence of the report.
pub fn tag_report(report: &Report, keywords: &KeywordConfig) -> TagSet {
    Tag::ALL.into_iter().filter(|&t| report.sentences.iter().any(|s| keywords.matches(t, &s.text))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagStat {
    pub tag: Tag,
    /// Reports carrying the tag.
    pub count: u64,
    /// Fraction of reports carrying the tag.
    pub frequency: f64,
    /// Inverse frequency, zero when the tag never occurs.
    pub weight: f64,
    /// Weight divided by the sum of weights over occurring tags.
    pub normalized_weight: f64,
    pub error_count: u32,
    /// Never occurs in the corpus; excluded from the normalization.
    pub absent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagProfile {
    pub reports: u64,
    pub tags: Vec<TagStat>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("tag profile needs at least one report")]
    EmptyCorpus,
    #[error("no tag occurs in the corpus; every context slot will fall back")]
    AllTagsAbsent { profile: TagProfile },
    #[error("tag frequency for {0} must be in [0, 1]")]
    BadFrequency(Tag),
}

impl TagProfile {
    /// Builds the profile from per-tag frequencies.
    pub fn from_frequencies(reports: u64, freq: [(Tag, f64); 4]) -> Result<Self, ProfileError> {
        let mut tags = Vec::with_capacity(4);
        for (tag, f) in freq {
            if !(0.0..=1.0).contains(&f) || f.is_nan() {
                return Err(ProfileError::BadFrequency(tag));
            }
            tags.push(TagStat {
                tag,
                count: (f * reports as f64).round() as u64,
                frequency: f,
                weight: if f > 0.0 { 1.0 / f } else { 0.0 },
                normalized_weight: 0.0,
                error_count: tag.error_count(),
                absent: f == 0.0,
            });
        }
        tags.sort_by_key(|s| s.tag);
        let total: f64 = tags.iter().map(|s| s.weight).sum();
        for s in &mut tags {
            if total > 0.0 {
                s.normalized_weight = s.weight / total;
            }
        }
        let profile = TagProfile { reports, tags };
        if total == 0.0 {
            return Err(ProfileError::AllTagsAbsent { profile });
        }
        Ok(profile)
    }

    pub fn stat(&self, tag: Tag) -> &TagStat {
        self.tags.iter().find(|s| s.tag == tag).expect("profile covers all four tags")
    }

    pub fn normalized_weight(&self, tag: Tag) -> f64 {
        self.stat(tag).normalized_weight
    }

    /// Profile in which all four tags are equally frequent.
    pub fn uniform() -> Self {
        TagProfile::from_frequencies(1, Tag::ALL.map(|t| (t, 1.0))).expect("uniform profile is valid")
    }
}

/// Report-granularity tag frequencies and inverse-frequency weights.
pub fn compute_tag_profile(corpus: &[TagSet]) -> Result<TagProfile, ProfileError> {
    if corpus.is_empty() {
        return Err(ProfileError::EmptyCorpus);
    }
    let mut counts = [0u64; 4];
    for set in corpus {
        for t in set.iter() {
            counts[t.slot()] += 1;
        }
    }
    let n = corpus.len() as u64;
    let mut profile = TagProfile::from_frequencies(n, Tag::ALL.map(|t| (t, counts[t.slot()] as f64 / n as f64)));
    let fix = |p: &mut TagProfile| {
        for s in &mut p.tags {
            s.count = counts[s.tag.slot()];
        }
    };
    match &mut profile {
        Ok(p) => fix(p),
        Err(ProfileError::AllTagsAbsent { profile: p }) => fix(p),
        Err(_) => {}
    }
    profile
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::parse_report;

    fn tags_of(text: &str) -> TagSet {
        tag_report(&parse_report(text, "t").unwrap(), &KeywordConfig::default())
    }

    #[test]
    fn sternotomy_report_has_all_tags() {
        let text = "Findings: Endotracheal tube ends 4.3 cm above the carina. There is mild-to-moderate cardiomegaly. Severe acute pulmonary edema.";
        assert_eq!(tags_of(text), TagSet::all());
    }

    #[test]
    fn plain_report_has_no_tags() {
        assert!(tags_of("No acute process.").is_empty());
    }

    #[test]
    fn picc_sentence() {
        let expected: TagSet = [Tag::Device, Tag::Location].into_iter().collect();
        assert_eq!(tags_of("There is a right-sided PICC line."), expected);
    }

    #[test]
    fn negated_mention_still_tags() {
        assert!(tags_of("No large pleural effusion.").contains(Tag::Severity));
    }

    #[test]
    fn two_tag_profile() {
        let mut corpus = Vec::new();
        for i in 0..8 {
            let mut s = TagSet::new();
            if i < 4 {
                s.insert(Tag::Device);
            }
            if i < 2 {
                s.insert(Tag::Severity);
            }
            corpus.push(s);
        }
        let p = compute_tag_profile(&corpus).unwrap();
        let dev = p.stat(Tag::Device);
        let sev = p.stat(Tag::Severity);
        assert_eq!((dev.frequency, dev.weight), (0.5, 2.0));
        assert_eq!((sev.frequency, sev.weight), (0.25, 4.0));
        assert!((dev.normalized_weight - 1.0 / 3.0).abs() < 1e-12);
        assert!((sev.normalized_weight - 2.0 / 3.0).abs() < 1e-12);
        assert!(p.stat(Tag::Location).absent);
        assert_eq!(p.stat(Tag::Device).count, 4);
    }

    #[test]
    fn single_and_uniform_profiles() {
        let corpus = vec![[Tag::Location].into_iter().collect::<TagSet>(); 3];
        let p = compute_tag_profile(&corpus).unwrap();
        assert_eq!(p.normalized_weight(Tag::Location), 1.0);
        let all = compute_tag_profile(&[TagSet::all()]).unwrap();
        for t in Tag::ALL {
            assert!((all.normalized_weight(t) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_errors() {
        assert_eq!(compute_tag_profile(&[]), Err(ProfileError::EmptyCorpus));
        match compute_tag_profile(&[TagSet::new(), TagSet::new()]) {
            Err(ProfileError::AllTagsAbsent { profile }) => {
                assert_eq!(profile.reports, 2);
                assert!(profile.tags.iter().all(|s| s.absent));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tagset_parsing() {
        let s: TagSet = "device, severity".parse().unwrap();
        assert_eq!(s.len(), 2);
        assert!("".parse::<TagSet>().unwrap().is_empty());
        assert!("devices".parse::<TagSet>().is_err());
        assert_eq!(TagSet::all_subsets().len(), 16);
    }
}
