//! Structural checks on an injection result.

use serde::{Deserialize, Serialize};

use crate::inject::InjectionResult;
use crate::report::{parse_report, Report};

/// Allowed change in sentence count between original and error report.
const MIN_DELTA: i64 = -2;
const MAX_DELTA: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationPolicy {
    Reject,
    #[default]
    KeepWithFlag,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_injection(original: &Report, result: &InjectionResult) -> ValidationReport {
    let mut violations = Vec::new();
    if result.error_text.contains("<<<") || result.error_text.contains(">>>") {
        violations.push("slot delimiter leaked into the error report".to_string());
    }
    let error = match parse_report(&result.error_text, &original.id) {
        Ok(r) => r,
        Err(e) => {
            violations.push(format!("error report does not parse: {e}"));
            return ValidationReport { violations };
        }
    };
    if error.normalized_text() == original.normalized_text() {
        violations.push("no change applied".to_string());
    }
    let delta = error.len() as i64 - original.len() as i64;
    if !(MIN_DELTA..=MAX_DELTA).contains(&delta) {
        violations.push(format!("sentence count changed by {delta}"));
    }
    if let Some(declared) = &result.declared_changes {
        for (&j, change) in declared {
            if j >= error.len() {
                violations.push(format!("declared error index {j} is out of range"));
            }
            if change.label > 1 {
                violations.push(format!("declared label {} at index {j} is not 0 or 1", change.label));
            }
            if let Some(i) = change.original_index {
                if i >= original.len() {
                    violations.push(format!("declared original index {i} at index {j} is out of range"));
                }
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::inject::{Backend, DeclaredChange};
    use crate::sampler::ErrorPlan;
    use crate::taxonomy::ErrorClass;

    fn result(text: &str, declared: Option<BTreeMap<usize, DeclaredChange>>) -> InjectionResult {
        InjectionResult {
            error_text: text.into(),
            declared_changes: declared,
            backend: Backend::Llm,
            plan: ErrorPlan {
                content_addition: ErrorClass::FalsePrediction,
                linguistic: ErrorClass::AddTypo,
                context_slot: ErrorClass::ChangeSeverity,
                context_fell_back: false,
                seed: 0,
            },
            flags: Vec::new(),
        }
    }

    #[test]
    fn identical_text_flagged() {
        let r = parse_report("Mild cardiomegaly. No edema.", "v").unwrap();
        let v = validate_injection(&r, &result("Mild cardiomegaly.  No edema.", None));
        assert_eq!(v.violations, vec!["no change applied".to_string()]);
    }

    #[test]
    fn declared_index_out_of_range() {
        let r = parse_report("Mild cardiomegaly. No edema.", "v").unwrap();
        let mut d = BTreeMap::new();
        d.insert(
            5,
            DeclaredChange { label: 1, error_class: None, explanation: String::new(), original_index: Some(0) },
        );
        let v = validate_injection(&r, &result("Moderate cardiomegaly. No edema.", Some(d)));
        assert!(v.violations.iter().any(|s| s.contains("out of range")));
    }

    #[test]
    fn count_delta_bounds() {
        let r = parse_report("A is here.", "v").unwrap();
        let v = validate_injection(&r, &result("A is here. B. C. D. E.", None));
        assert!(v.violations.iter().any(|s| s.contains("sentence count")));
    }
}
