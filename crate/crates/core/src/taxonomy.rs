//! Error classes and the categories they belong to.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tagger::Tag;

/// One of the twelve injectable error classes, plus the labeling-only
/// `NotApplicable` marker for unchanged sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorClass {
    AddMedicalDevice,
    ChangeNameOfDevice,
    ChangePositionOfDevice,
    ChangeSeverity,
    ChangeLocation,
    FalsePrediction,
    FalseNegation,
    ChangeMeasurement,
    AddOppositeSentence,
    AddRepetitions,
    ChangeToHomophone,
    AddTypo,
    NotApplicable,
}

/// Sampling category of an injectable class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    ContentAddition,
    LinguisticQuality,
    ContextDependent,
}

impl ErrorClass {
    /// The twelve injectable classes in reporting order.
    pub const INJECTABLE: [ErrorClass; 12] = [
        ErrorClass::AddMedicalDevice,
        ErrorClass::ChangeNameOfDevice,
        ErrorClass::ChangePositionOfDevice,
        ErrorClass::ChangeSeverity,
        ErrorClass::ChangeLocation,
        ErrorClass::FalsePrediction,
        ErrorClass::FalseNegation,
        ErrorClass::ChangeMeasurement,
        ErrorClass::AddOppositeSentence,
        ErrorClass::AddRepetitions,
        ErrorClass::ChangeToHomophone,
        ErrorClass::AddTypo,
    ];

    pub const CONTENT_ADDITION: [ErrorClass; 3] =
        [ErrorClass::AddMedicalDevice, ErrorClass::FalsePrediction, ErrorClass::FalseNegation];

    pub const LINGUISTIC: [ErrorClass; 4] = [
        ErrorClass::AddOppositeSentence,
        ErrorClass::AddRepetitions,
        ErrorClass::ChangeToHomophone,
        ErrorClass::AddTypo,
    ];

    pub const CONTEXT_DEPENDENT: [ErrorClass; 5] = [
        ErrorClass::ChangeNameOfDevice,
        ErrorClass::ChangePositionOfDevice,
        ErrorClass::ChangeSeverity,
        ErrorClass::ChangeLocation,
        ErrorClass::ChangeMeasurement,
    ];

    /// Classes a sentence with no original counterpart can carry.
    pub const ADDED: [ErrorClass; 4] = [
        ErrorClass::AddMedicalDevice,
        ErrorClass::FalsePrediction,
        ErrorClass::AddOppositeSentence,
        ErrorClass::AddRepetitions,
    ];

    pub fn category(self) -> Option<Category> {
        use ErrorClass::*;
        match self {
            AddMedicalDevice | FalsePrediction | FalseNegation => Some(Category::ContentAddition),
            AddOppositeSentence | AddRepetitions | ChangeToHomophone | AddTypo => Some(Category::LinguisticQuality),
            ChangeNameOfDevice | ChangePositionOfDevice | ChangeSeverity | ChangeLocation | ChangeMeasurement => {
                Some(Category::ContextDependent)
            }
            NotApplicable => None,
        }
    }

    /// The tag a context-dependent class requires.
    pub fn required_tag(self) -> Option<Tag> {
        use ErrorClass::*;
        match self {
            ChangeNameOfDevice | ChangePositionOfDevice => Some(Tag::Device),
            ChangeSeverity => Some(Tag::Severity),
            ChangeLocation => Some(Tag::Location),
            ChangeMeasurement => Some(Tag::Measurement),
            _ => None,
        }
    }

    /// Numeric code used by the sentence labeling dictionary format (1..=13).
    pub fn code(self) -> u8 {
        use ErrorClass::*;
        match self {
            AddMedicalDevice => 1,
            ChangeNameOfDevice => 2,
            ChangePositionOfDevice => 3,
            ChangeSeverity => 4,
            ChangeLocation => 5,
            FalseNegation => 6,
            FalsePrediction => 7,
            ChangeMeasurement => 8,
            AddOppositeSentence => 9,
            AddRepetitions => 10,
            ChangeToHomophone => 11,
            AddTypo => 12,
            NotApplicable => 13,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        use ErrorClass::*;
        Some(match code {
            1 => AddMedicalDevice,
            2 => ChangeNameOfDevice,
            3 => ChangePositionOfDevice,
            4 => ChangeSeverity,
            5 => ChangeLocation,
            6 => FalseNegation,
            7 => FalsePrediction,
            8 => ChangeMeasurement,
            9 => AddOppositeSentence,
            10 => AddRepetitions,
            11 => ChangeToHomophone,
            12 => AddTypo,
            13 => NotApplicable,
            _ => return None,
        })
    }

    /// Human-readable name as shown in distribution tables.
    pub fn display_name(self) -> &'static str {
        use ErrorClass::*;
        match self {
            AddMedicalDevice => "Add Medical Device",
            ChangeNameOfDevice => "Change Name of Device",
            ChangePositionOfDevice => "Change Position of Device",
            ChangeSeverity => "Change Severity",
            ChangeLocation => "Change Location",
            FalsePrediction => "False Prediction",
            FalseNegation => "False Negation",
            ChangeMeasurement => "Change Measurement",
            AddOppositeSentence => "Add Opposite Sentence",
            AddRepetitions => "Add Repetitions",
            ChangeToHomophone => "Change to Homophone",
            AddTypo => "Add Typo",
            NotApplicable => "Not Applicable",
        }
    }

    pub fn identifier(self) -> &'static str {
        use ErrorClass::*;
        match self {
            AddMedicalDevice => "AddMedicalDevice",
            ChangeNameOfDevice => "ChangeNameOfDevice",
            ChangePositionOfDevice => "ChangePositionOfDevice",
            ChangeSeverity => "ChangeSeverity",
            ChangeLocation => "ChangeLocation",
            FalsePrediction => "FalsePrediction",
            FalseNegation => "FalseNegation",
            ChangeMeasurement => "ChangeMeasurement",
            AddOppositeSentence => "AddOppositeSentence",
            AddRepetitions => "AddRepetitions",
            ChangeToHomophone => "ChangeToHomophone",
            AddTypo => "AddTypo",
            NotApplicable => "NotApplicable",
        }
    }

    /// Surface-level corruptions whose wrongness does not depend on any
    /// external context. These stay label 1 even in neutral sentences.
    pub fn is_surface(self) -> bool {
        matches!(self, ErrorClass::AddTypo | ErrorClass::ChangeToHomophone)
    }

    /// Classes the injection prompt marks as priority errors.
    pub fn is_priority(self) -> bool {
        matches!(self, ErrorClass::FalsePrediction | ErrorClass::FalseNegation | ErrorClass::AddOppositeSentence)
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.identifier())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown error class '{0}'")]
pub struct UnknownClass(pub String);

impl FromStr for ErrorClass {
    type Err = UnknownClass;

    /// Accepts the identifier, the display name (case and spacing
    /// insensitive), or the numeric code.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if let Ok(code) = trimmed.parse::<u8>() {
            return ErrorClass::from_code(code).ok_or_else(|| UnknownClass(s.to_string()));
        }
        let squash = |t: &str| t.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let wanted = squash(trimmed);
        let mut all = ErrorClass::INJECTABLE.to_vec();
        all.push(ErrorClass::NotApplicable);
        for class in all {
            if squash(class.identifier()) == wanted || squash(class.display_name()) == wanted {
                return Ok(class);
            }
        }
        // Names used by the labeling prompt and the taxonomy table.
        match wanted.as_str() {
            "changenameofalreadypresentdevice" => Ok(ErrorClass::ChangeNameOfDevice),
            "changepositionofalreadypresentdevice" => Ok(ErrorClass::ChangePositionOfDevice),
            "changealreadypresentseverity" => Ok(ErrorClass::ChangeSeverity),
            "addcontradictions" | "addcontradiction" => Ok(ErrorClass::AddOppositeSentence),
            "addrepetition" => Ok(ErrorClass::AddRepetitions),
            "addmedicaldevices" => Ok(ErrorClass::AddMedicalDevice),
            _ => Err(UnknownClass(s.to_string())),
        }
    }
}
