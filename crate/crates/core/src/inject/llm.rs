//! LLM backend: client abstraction, retry and rate limiting, audit log and
//! response parsing.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Condvar, Mutex, OnceLock};
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::inject::prompt::{build_injection_prompt, TemplateStore};
use crate::inject::validate::{validate_injection, ValidationPolicy};
use crate::inject::{Backend, DeclaredChange, InjectError, InjectionResult};
use crate::report::{parse_report, Report};
use crate::sampler::ErrorPlan;
use crate::splice::pydict::{self, PyValue};

pub const DEFAULT_API_KEY_ENV: &str = "RADFAULT_API_KEY";

#[derive(Debug, Clone, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed completion payload: {0}")]
    Payload(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
}

impl LlmError {
    /// Transient failures worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport(_) => true,
            LlmError::Status { code, .. } => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

/// A text completion backend. Implementations must tolerate concurrent
/// calls.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSettings {
    /// OpenAI-compatible chat completions URL.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    /// Maximum requests in flight.
    pub concurrency: usize,
    pub requests_per_minute: Option<u32>,
    /// Environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            endpoint: String::new(),
            model: "gpt-4o".into(),
            temperature: 0.7,
            timeout_secs: 120,
            max_retries: 3,
            backoff_ms: 1000,
            concurrency: 4,
            requests_per_minute: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

impl LlmSettings {
    /// Checks endpoint and credential without contacting the server.
    pub fn check(&self) -> Result<String, LlmError> {
        if self.endpoint.trim().is_empty() {
            return Err(LlmError::Config("llm.endpoint is not set".into()));
        }
        match std::env::var(&self.api_key_env) {
            Ok(key) if !key.trim().is_empty() => Ok(key),
            _ => Err(LlmError::Config(format!("environment variable {} is not set", self.api_key_env))),
        }
    }
}

#[cfg(feature = "http")]
pub struct HttpLlmClient {
    settings: LlmSettings,
    api_key: String,
    http: reqwest::blocking::Client,
}

#[cfg(feature = "http")]
impl HttpLlmClient {
    pub fn from_env(settings: LlmSettings) -> Result<Self, LlmError> {
        let api_key = settings.check()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpLlmClient { settings, api_key, http })
    }
}

#[cfg(feature = "http")]
impl LlmClient for HttpLlmClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = serde_json::json!({
            "model": self.settings.model,
            "temperature": self.settings.temperature,
            "n": 1,
            "messages": [{"role": "user", "content": prompt}],
        });
        let resp = self
            .http
            .post(&self.settings.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(LlmError::Status { code: status.as_u16(), body });
        }
        let payload: serde_json::Value = resp.json().map_err(|e| LlmError::Payload(e.to_string()))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::Payload("missing choices[0].message.content".into()))
    }
}

/// Counting semaphore for in-flight requests.
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().expect("permit lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("permit lock");
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("permit lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Wraps a client with bounded concurrency, a request-rate floor and
/// retries with exponential backoff.
pub struct ResilientClient<C> {
    inner: C,
    max_retries: u32,
    backoff: Duration,
    permits: Permits,
    min_interval: Option<Duration>,
    next_slot: Mutex<Instant>,
}

impl<C: LlmClient> ResilientClient<C> {
    pub fn new(inner: C, settings: &LlmSettings) -> Self {
        ResilientClient {
            inner,
            max_retries: settings.max_retries,
            backoff: Duration::from_millis(settings.backoff_ms),
            permits: Permits { free: Mutex::new(settings.concurrency.max(1)), cv: Condvar::new() },
            min_interval: settings
                .requests_per_minute
                .filter(|&r| r > 0)
                .map(|r| Duration::from_secs_f64(60.0 / f64::from(r))),
            next_slot: Mutex::new(Instant::now()),
        }
    }

    fn wait_for_slot(&self) {
        let Some(interval) = self.min_interval else { return };
        let wait = {
            let mut next = self.next_slot.lock().expect("rate lock");
            let now = Instant::now();
            let start = (*next).max(now);
            *next = start + interval;
            start - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

impl<C: LlmClient> LlmClient for ResilientClient<C> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let _permit = self.permits.acquire();
        let mut attempt = 0;
        loop {
            self.wait_for_slot();
            attempt += 1;
            match self.inner.complete(prompt) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() && attempt <= self.max_retries => {
                    let delay = self.backoff.saturating_mul(1 << (attempt - 1).min(16));
                    std::thread::sleep(delay);
                }
                Err(e) if e.is_retryable() => {
                    return Err(LlmError::Exhausted { attempts: attempt, last: e.to_string() })
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub report_id: String,
    pub stage: String,
    pub plan: Option<ErrorPlan>,
    pub prompt_sha256: String,
    pub response_sha256: Option<String>,
    pub status: String,
}

/// Append-only JSONL log of model calls.
pub struct AuditLog {
    out: Mutex<BufWriter<File>>,
}

impl AuditLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AuditLog { out: Mutex::new(BufWriter::new(file)) })
    }

    pub fn record(&self, entry: &AuditEntry) -> std::io::Result<()> {
        let line = serde_json::to_string(entry).map_err(std::io::Error::other)?;
        let mut out = self.out.lock().expect("audit lock");
        writeln!(out, "{line}")?;
        out.flush()
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn delimiter_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<<<\s*\d*\s*>>>|<<<|>>>").unwrap())
}

/// Removes slot delimiters that leaked into model output.
pub fn sanitize_delimiters(text: &str) -> String {
    let stripped = delimiter_regex().replace_all(text, " ");
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn declared_entry_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(\d+)\s*:\s*[\[(]?\s*([01])\s*,\s*(?:'((?:[^'\\]|\\.)*)'|"((?:[^"\\]|\\.)*)")\s*,\s*(\d+|None|null)\s*[\])]?"#)
            .unwrap()
    })
}

fn declared_from_pydict(value: &PyValue) -> Option<BTreeMap<usize, DeclaredChange>> {
    let PyValue::Dict(items) = value else { return None };
    let mut out = BTreeMap::new();
    for (k, v) in items {
        let index = usize::try_from(k.as_int()?).ok()?;
        let PyValue::List(parts) = v else { return None };
        let [label, explanation, original] = parts.as_slice() else { return None };
        let label = u8::try_from(label.as_int()?).ok()?;
        let original_index = match original {
            PyValue::None => None,
            other => Some(usize::try_from(other.as_int()?).ok()?),
        };
        out.insert(
            index,
            DeclaredChange {
                label,
                error_class: None,
                explanation: explanation.as_str().unwrap_or_default().to_string(),
                original_index,
            },
        );
    }
    Some(out)
}

fn declared_lenient(text: &str) -> Option<BTreeMap<usize, DeclaredChange>> {
    let mut out = BTreeMap::new();
    for cap in declared_entry_regex().captures_iter(text) {
        let index: usize = cap[1].parse().ok()?;
        let explanation = cap.get(3).or(cap.get(4)).map_or("", |m| m.as_str());
        let original_index = cap[5].parse().ok();
        out.insert(
            index,
            DeclaredChange {
                label: cap[2].parse().ok()?,
                error_class: None,
                explanation: explanation.to_string(),
                original_index,
            },
        );
    }
    (!out.is_empty()).then_some(out)
}

/// Splits a response into the report text and the optional change
/// dictionary that follows the first blank line.
pub fn parse_injection_response(raw: &str) -> Result<(String, Option<BTreeMap<usize, DeclaredChange>>), InjectError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(InjectError::UnparseableResponse { reason: "empty response".into(), raw: raw.to_string() });
    }
    let (text, dict) = match trimmed.split_once("\n\n") {
        Some((t, d)) => (t, Some(d)),
        None => (trimmed, None),
    };
    let text = sanitize_delimiters(text);
    if text.is_empty() {
        return Err(InjectError::UnparseableResponse {
            reason: "no report text before the dictionary".into(),
            raw: raw.to_string(),
        });
    }
    let declared =
        dict.and_then(|d| pydict::parse(d).ok().and_then(|v| declared_from_pydict(&v)).or_else(|| declared_lenient(d)));
    Ok((text, declared))
}

/// Injects the plan's errors by prompting the model.
pub fn inject_with_llm(
    report: &Report,
    plan: &ErrorPlan,
    client: &dyn LlmClient,
    templates: &TemplateStore,
    policy: ValidationPolicy,
    audit: Option<&AuditLog>,
) -> Result<InjectionResult, InjectError> {
    let bundle = build_injection_prompt(report, plan, templates)?;
    let prompt = bundle.assembled();
    let outcome = client.complete(&prompt);
    let log = |response: Option<&str>, status: &str| {
        if let Some(a) = audit {
            // Audit failures must not fail the report.
            let _ = a.record(&AuditEntry {
                report_id: report.id.clone(),
                stage: "inject".into(),
                plan: Some(*plan),
                prompt_sha256: sha256_hex(&prompt),
                response_sha256: response.map(sha256_hex),
                status: status.into(),
            });
        }
    };
    let raw = match outcome {
        Ok(raw) => raw,
        Err(e) => {
            log(None, &format!("error: {e}"));
            let (attempts, last) = match e {
                LlmError::Exhausted { attempts, last } => (attempts, last),
                other => (1, other.to_string()),
            };
            return Err(InjectError::BackendUnavailable { attempts, last });
        }
    };
    let parsed = parse_injection_response(&raw);
    let (error_text, declared_changes) = match parsed {
        Ok(p) => p,
        Err(e) => {
            log(Some(&raw), "unparseable");
            return Err(e);
        }
    };
    if parse_report(&error_text, &report.id).is_err() {
        log(Some(&raw), "unparseable");
        return Err(InjectError::UnparseableResponse { reason: "report text has no sentences".into(), raw });
    }
    let mut result =
        InjectionResult { error_text, declared_changes, backend: Backend::Llm, plan: *plan, flags: Vec::new() };
    let report_v = validate_injection(report, &result);
    if !report_v.is_ok() {
        match policy {
            ValidationPolicy::Reject => {
                log(Some(&raw), "rejected");
                return Err(InjectError::ValidationFailed(report_v));
            }
            ValidationPolicy::KeepWithFlag => result.flags = report_v.violations,
        }
    }
    log(Some(&raw), if result.flags.is_empty() { "ok" } else { "flagged" });
    Ok(result)
}
