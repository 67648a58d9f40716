//! Error injection: prompt assembly, the LLM backend and the rule backend.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sampler::ErrorPlan;
use crate::taxonomy::ErrorClass;

pub mod llm;
pub mod prompt;
pub mod rules;
pub mod validate;

pub use llm::{inject_with_llm, parse_injection_response, sanitize_delimiters, LlmClient, LlmError};
pub use prompt::{build_injection_prompt, PromptBundle, PromptStyle, TemplateError, TemplateStore};
pub use rules::inject_with_rules;
pub use validate::{validate_injection, ValidationPolicy, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Rules,
    Llm,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Rules => "rules",
            Backend::Llm => "llm",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rules" | "rule" => Ok(Backend::Rules),
            "llm" => Ok(Backend::Llm),
            other => Err(format!("unknown backend '{other}' (expected rules or llm)")),
        }
    }
}

/// What the backend says it did to one error-report sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredChange {
    /// 0 unchanged, 1 changed.
    pub label: u8,
    /// Known exactly for the rule backend; free text backends leave it empty.
    pub error_class: Option<ErrorClass>,
    pub explanation: String,
    /// None for inserted sentences.
    pub original_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionResult {
    pub error_text: String,
    /// Keyed by error-report sentence index.
    pub declared_changes: Option<BTreeMap<usize, DeclaredChange>>,
    pub backend: Backend,
    pub plan: ErrorPlan,
    /// Validation findings kept under the keep-with-flag policy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum InjectError {
    #[error("no eligible site for {0}")]
    NoEligibleSite(ErrorClass),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("backend unavailable after {attempts} attempts: {last}")]
    BackendUnavailable { attempts: u32, last: String },
    #[error("unparseable response: {reason}")]
    UnparseableResponse { reason: String, raw: String },
    #[error("validation failed: {}", .0.violations.join("; "))]
    ValidationFailed(ValidationReport),
    #[error("injected text does not re-segment cleanly: {0}")]
    Segmentation(String),
}
