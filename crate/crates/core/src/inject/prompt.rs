//! Prompt templates and injection prompt assembly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::report::Report;
use crate::sampler::ErrorPlan;
use crate::taxonomy::ErrorClass;

const PRIORITY_MARKER: &str = "[priority error]";

const BUILTIN_LONG: [(ErrorClass, &str); 12] = [
    (ErrorClass::AddMedicalDevice, include_str!("../../assets/templates/add_medical_device.txt")),
    (ErrorClass::ChangeNameOfDevice, include_str!("../../assets/templates/change_name_of_device.txt")),
    (ErrorClass::ChangePositionOfDevice, include_str!("../../assets/templates/change_position_of_device.txt")),
    (ErrorClass::ChangeSeverity, include_str!("../../assets/templates/change_severity.txt")),
    (ErrorClass::ChangeLocation, include_str!("../../assets/templates/change_location.txt")),
    (ErrorClass::FalsePrediction, include_str!("../../assets/templates/false_prediction.txt")),
    (ErrorClass::FalseNegation, include_str!("../../assets/templates/false_negation.txt")),
    (ErrorClass::ChangeMeasurement, include_str!("../../assets/templates/change_measurement.txt")),
    (ErrorClass::AddOppositeSentence, include_str!("../../assets/templates/add_opposite_sentence.txt")),
    (ErrorClass::AddRepetitions, include_str!("../../assets/templates/add_repetitions.txt")),
    (ErrorClass::ChangeToHomophone, include_str!("../../assets/templates/change_to_homophone.txt")),
    (ErrorClass::AddTypo, include_str!("../../assets/templates/add_typo.txt")),
];

const BUILTIN_BASE: &str = include_str!("../../assets/templates/base_injection.txt");
const BUILTIN_BASELINE: &str = include_str!("../../assets/templates/baseline.toml");
const BUILTIN_SPLICE: &str = include_str!("../../assets/templates/splice_prompt.txt");
const BUILTIN_LABEL: &str = include_str!("../../assets/templates/label_prompt.txt");

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("missing template for {0}")]
    MissingTemplate(String),
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing baseline templates: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("template for {0} contains a slot delimiter")]
    Delimiter(String),
}

/// Which instruction text fills each error slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    /// Full per-class prompts with worked examples.
    #[default]
    Long,
    /// One-line instructions.
    Baseline,
}

#[derive(Debug, Clone)]
pub struct TemplateStore {
    pub base: String,
    pub long: BTreeMap<ErrorClass, String>,
    pub baseline: BTreeMap<ErrorClass, String>,
    pub splice: String,
    pub label: String,
    pub style: PromptStyle,
}

fn file_name(class: ErrorClass) -> String {
    let mut out = String::new();
    for (i, ch) in class.identifier().chars().enumerate() {
        if ch.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    out + ".txt"
}

fn parse_baseline(text: &str) -> Result<BTreeMap<ErrorClass, String>, TemplateError> {
    let raw: BTreeMap<String, String> = toml::from_str(text)?;
    let mut out = BTreeMap::new();
    for (k, v) in raw {
        let class =
            k.parse::<ErrorClass>().map_err(|_| TemplateError::MissingTemplate(format!("unknown class key '{k}'")))?;
        out.insert(class, v);
    }
    Ok(out)
}

impl TemplateStore {
    pub fn builtin() -> Self {
        TemplateStore {
            base: BUILTIN_BASE.to_string(),
            long: BUILTIN_LONG.iter().map(|(c, t)| (*c, t.to_string())).collect(),
            baseline: parse_baseline(BUILTIN_BASELINE).expect("bundled baseline templates parse"),
            splice: BUILTIN_SPLICE.to_string(),
            label: BUILTIN_LABEL.to_string(),
            style: PromptStyle::Long,
        }
    }

    /// Loads templates from a directory laid out like the bundled assets.
    /// Files that are absent fall back to the bundled text.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut store = TemplateStore::builtin();
        let read = |name: &str| -> Result<Option<String>, TemplateError> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(t) => Ok(Some(t)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(TemplateError::Io { path: path.display().to_string(), source }),
            }
        };
        if let Some(t) = read("base_injection.txt")? {
            store.base = t;
        }
        if let Some(t) = read("splice_prompt.txt")? {
            store.splice = t;
        }
        if let Some(t) = read("label_prompt.txt")? {
            store.label = t;
        }
        if let Some(t) = read("baseline.toml")? {
            store.baseline = parse_baseline(&t)?;
        }
        for class in ErrorClass::INJECTABLE {
            if let Some(t) = read(&file_name(class))? {
                store.long.insert(class, t);
            }
        }
        Ok(store)
    }

    pub fn with_style(mut self, style: PromptStyle) -> Self {
        self.style = style;
        self
    }

    /// Slot text for one class, carrying the priority marker where needed.
    pub fn error_prompt(&self, class: ErrorClass) -> Result<String, TemplateError> {
        let table = match self.style {
            PromptStyle::Long => &self.long,
            PromptStyle::Baseline => &self.baseline,
        };
        let text = table
            .get(&class)
            .ok_or_else(|| TemplateError::MissingTemplate(class.identifier().to_string()))?
            .trim_end()
            .to_string();
        if text.contains("<<<") || text.contains(">>>") {
            return Err(TemplateError::Delimiter(class.identifier().to_string()));
        }
        if class.is_priority() && !text.starts_with(PRIORITY_MARKER) {
            return Ok(format!("{PRIORITY_MARKER} {text}"));
        }
        Ok(text)
    }
}

impl Default for TemplateStore {
    fn default() -> Self {
        TemplateStore::builtin()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    /// Base instructions with the three error prompts spliced in.
    pub base: String,
    /// Slot texts in plan order: context, content, linguistic.
    pub error_prompts: [String; 3],
    pub report_text: String,
}

impl PromptBundle {
    /// The single string sent to the model.
    pub fn assembled(&self) -> String {
        format!("{}\n\nReport: {}", self.base.trim_end(), self.report_text)
    }
}

pub fn build_injection_prompt(
    report: &Report,
    plan: &ErrorPlan,
    templates: &TemplateStore,
) -> Result<PromptBundle, TemplateError> {
    let classes = plan.classes();
    let error_prompts =
        [templates.error_prompt(classes[0])?, templates.error_prompt(classes[1])?, templates.error_prompt(classes[2])?];
    for slot in ["{error_1}", "{error_2}", "{error_3}"] {
        if !templates.base.contains(slot) {
            return Err(TemplateError::MissingTemplate(format!("base template slot {slot}")));
        }
    }
    let base = templates
        .base
        .replace("{error_1}", &format!("{} ", error_prompts[0]))
        .replace("{error_2}", &format!("{} ", error_prompts[1]))
        .replace("{error_3}", &format!("{} ", error_prompts[2]));
    let report_text = report.normalized_text().replace("<<<", "").replace(">>>", "");
    Ok(PromptBundle { base, error_prompts, report_text })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::parse_report;

    fn plan(context: ErrorClass, content: ErrorClass, linguistic: ErrorClass) -> ErrorPlan {
        ErrorPlan { content_addition: content, linguistic, context_slot: context, context_fell_back: false, seed: 0 }
    }

    #[test]
    fn priority_marker_in_content_slot() {
        let r = parse_report("Findings: Mild cardiomegaly. Impression: No acute process.", "p").unwrap();
        let b = build_injection_prompt(
            &r,
            &plan(ErrorClass::ChangeSeverity, ErrorClass::FalsePrediction, ErrorClass::AddTypo),
            &TemplateStore::builtin(),
        )
        .unwrap();
        assert!(b.error_prompts[1].contains("[priority error] Add false predictions"));
        assert!(b.base.contains("<<<2>>> [priority error] Add false predictions"));
        assert!(!b.error_prompts[0].contains(PRIORITY_MARKER));
    }

    #[test]
    fn report_appears_once() {
        let text = "Findings: Unique zebra sentence here. Impression: Another odd remark.";
        let r = parse_report(text, "p").unwrap();
        for style in [PromptStyle::Long, PromptStyle::Baseline] {
            let store = TemplateStore::builtin().with_style(style);
            let b = build_injection_prompt(
                &r,
                &plan(ErrorClass::ChangeLocation, ErrorClass::FalseNegation, ErrorClass::AddOppositeSentence),
                &store,
            )
            .unwrap();
            assert_eq!(b.assembled().matches(text).count(), 1);
            assert!(b.error_prompts[2].starts_with(PRIORITY_MARKER));
        }
    }

    #[test]
    fn repetition_prompt_mentions_second_instance() {
        let r = parse_report("No acute process.", "p").unwrap();
        let b = build_injection_prompt(
            &r,
            &plan(ErrorClass::AddTypo, ErrorClass::AddMedicalDevice, ErrorClass::AddRepetitions),
            &TemplateStore::builtin(),
        )
        .unwrap();
        assert!(b.error_prompts[2].contains("mark the second instance of the sentence as the error"));
    }

    #[test]
    fn all_classes_have_both_styles() {
        for style in [PromptStyle::Long, PromptStyle::Baseline] {
            let store = TemplateStore::builtin().with_style(style);
            for class in ErrorClass::INJECTABLE {
                assert!(store.error_prompt(class).is_ok(), "{class} {style:?}");
            }
        }
        assert_eq!(file_name(ErrorClass::ChangeToHomophone), "change_to_homophone.txt");
    }

    #[test]
    fn missing_template_reported() {
        let mut store = TemplateStore::builtin();
        store.long.remove(&ErrorClass::AddTypo);
        let r = parse_report("No acute process.", "p").unwrap();
        let err = build_injection_prompt(
            &r,
            &plan(ErrorClass::ChangeSeverity, ErrorClass::FalsePrediction, ErrorClass::AddTypo),
            &store,
        );
        assert!(matches!(err, Err(TemplateError::MissingTemplate(_))));
    }
}
