//! Screening for neutral sentences: comparisons with prior studies and
//! administrative sentences with no clinical finding.

use std::path::Path;
use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::Deserialize;

pub const DEFAULT_NEUTRAL_CUES: &str = include_str!("../../assets/neutral_cues.toml");

#[derive(Debug, thiserror::Error)]
pub enum CueError {
    #[error("reading neutral cues {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing neutral cues: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad neutral cue pattern: {0}")]
    Pattern(#[from] regex::Error),
}

#[derive(Debug, Deserialize)]
struct RawCues {
    #[serde(default)]
    prior: Vec<String>,
    #[serde(default)]
    administrative: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct NeutralCues {
    prior: Vec<Regex>,
    administrative: Vec<Regex>,
}

impl NeutralCues {
    pub fn from_toml(source: &str) -> Result<Self, CueError> {
        let raw: RawCues = toml::from_str(source)?;
        let compile = |list: &[String]| -> Result<Vec<Regex>, CueError> {
            list.iter().map(|p| RegexBuilder::new(p).case_insensitive(true).build().map_err(CueError::from)).collect()
        };
        Ok(NeutralCues { prior: compile(&raw.prior)?, administrative: compile(&raw.administrative)? })
    }

    pub fn from_path(path: &Path) -> Result<Self, CueError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CueError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn builtin() -> &'static NeutralCues {
        static CUES: OnceLock<NeutralCues> = OnceLock::new();
        CUES.get_or_init(|| NeutralCues::from_toml(DEFAULT_NEUTRAL_CUES).expect("bundled cues are valid"))
    }

    pub fn refers_to_prior(&self, sentence: &str) -> bool {
        self.prior.iter().any(|re| re.is_match(sentence))
    }

    pub fn is_administrative(&self, sentence: &str) -> bool {
        self.administrative.iter().any(|re| re.is_match(sentence))
    }

    pub fn is_neutral(&self, sentence: &str) -> bool {
        self.refers_to_prior(sentence) || self.is_administrative(sentence)
    }
}

/// Neutral screen with the bundled cue list.
pub fn screen_neutral(sentence: &str) -> bool {
    NeutralCues::builtin().is_neutral(sentence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neutral_examples() {
        for s in [
            "Findings: Comparison is made to previous study from ___.",
            "Unexplained severe rightward deviation of the trachea without tracheal narrowing at the level of the thoracic inlet, not markedly changed since __",
            "Stable COPD",
            "There is a high level of focal consolidation which has been stable since __",
            "Compared to chest radiographs since __",
            "Received note from Dr.__ on __",
            "Dr. __ communicated the above results to Dr. __ at 8:55 am on __ by telephone.",
        ] {
            assert!(screen_neutral(s), "{s}");
        }
    }

    #[test]
    fn clinical_sentences_are_not_neutral() {
        for s in [
            "There is no pulmonary edema.",
            "There has been removal of the right-sided chest tube.",
            "The right lung is relatively clear.",
        ] {
            assert!(!screen_neutral(s), "{s}");
        }
    }
}
