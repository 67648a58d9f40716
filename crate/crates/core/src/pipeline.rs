//! End-to-end run: parse, tag, profile, sample, inject, align, label, emit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{load_corpus, CorpusError};
use crate::dataset::{
    index_map, write_report_records, write_sentence_records, DatasetError, ReportRecord, Schema, SentenceDatasetRow,
    Split, SplitManifest,
};
use crate::exec::Execution;
use crate::inject::llm::{AuditLog, LlmSettings};
use crate::inject::rules::inject_with_rules_using;
use crate::inject::{
    inject_with_llm, Backend, InjectError, InjectionResult, LlmClient, PromptStyle, TemplateStore, ValidationPolicy,
};
use crate::lexicon::Lexicon;
use crate::report::{parse_report, Report};
use crate::sampler::{attempt_seed, derive_seed, sample_plan};
use crate::splice::{splice_reports, splice_with_llm, NeutralCues};
use crate::tagger::{compute_tag_profile, tag_report, KeywordConfig, ProfileError, TagProfile, TagSet};
use crate::taxonomy::ErrorClass;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which path aligns and labels the pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpliceMode {
    #[default]
    Rules,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory of `.txt` reports or a JSONL file of `{id, text}`.
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub backend: Backend,
    pub splice: SpliceMode,
    /// Keyword patterns; the bundled set when unset.
    pub keywords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub neutral_cues: Option<PathBuf>,
    /// Template directory; bundled templates when unset.
    pub templates: Option<PathBuf>,
    pub prompt_style: PromptStyle,
    /// Split manifest; hash-based 80/10/10 when unset.
    pub manifest: Option<PathBuf>,
    pub execution: Execution,
    pub threads: Option<usize>,
    /// Re-plans allowed when a plan has no eligible site.
    pub max_replans: u32,
    pub validation: ValidationPolicy,
    pub llm: LlmSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: PathBuf::new(),
            out: PathBuf::from("out"),
            seed: None,
            backend: Backend::Rules,
            splice: SpliceMode::Rules,
            keywords: None,
            lexicon: None,
            neutral_cues: None,
            templates: None,
            prompt_style: PromptStyle::Long,
            manifest: None,
            execution: Execution::default(),
            threads: None,
            max_replans: 16,
            validation: ValidationPolicy::default(),
            llm: LlmSettings::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("a run seed is required")]
    MissingSeed,
    #[error("corpus path is not set")]
    MissingCorpus,
    #[error("llm backend: {0}")]
    Llm(String),
    #[error("reading config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("loading {what}: {reason}")]
    Resource { what: &'static str, reason: String },
}

impl PipelineConfig {
    pub fn from_toml(source: &str) -> Result<Self, ConfigError> {
        toml::from_str(source).map_err(|e| ConfigError::Read { path: "<inline>".into(), reason: e.to_string() })
    }

    /// Reads a TOML config. Relative paths inside resolve against the
    /// config file's directory.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() && !p.as_os_str().is_empty() {
                    *p = base.join(&*p);
                }
            };
            fix(&mut cfg.corpus);
            fix(&mut cfg.out);
            for p in [&mut cfg.keywords, &mut cfg.lexicon, &mut cfg.neutral_cues, &mut cfg.templates, &mut cfg.manifest]
                .into_iter()
                .flatten()
            {
                fix(p);
            }
        }
        Ok(cfg)
    }

    /// Everything checkable before touching the corpus.
    pub fn check(&self) -> Result<u64, ConfigError> {
        let seed = self.seed.ok_or(ConfigError::MissingSeed)?;
        if self.corpus.as_os_str().is_empty() {
            return Err(ConfigError::MissingCorpus);
        }
        if self.backend == Backend::Llm || self.splice == SpliceMode::Llm {
            self.llm.check().map_err(|e| ConfigError::Llm(e.to_string()))?;
        }
        Ok(seed)
    }
}

/// Configuration files loaded once per run.
pub struct Resources {
    pub keywords: KeywordConfig,
    pub lexicon: Lexicon,
    pub cues: NeutralCues,
    pub templates: TemplateStore,
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, ConfigError> {
        let res = |what| move |e: &dyn std::fmt::Display| ConfigError::Resource { what, reason: e.to_string() };
        let keywords = match &cfg.keywords {
            Some(p) => KeywordConfig::from_path(p).map_err(|e| res("keywords")(&e))?,
            None => KeywordConfig::default(),
        };
        let lexicon = match &cfg.lexicon {
            Some(p) => Lexicon::from_path(p).map_err(|e| res("lexicon")(&e))?,
            None => Lexicon::builtin().clone(),
        };
        let cues = match &cfg.neutral_cues {
            Some(p) => NeutralCues::from_path(p).map_err(|e| res("neutral cues")(&e))?,
            None => NeutralCues::builtin().clone(),
        };
        let templates = match &cfg.templates {
            Some(p) => TemplateStore::from_dir(p).map_err(|e| res("templates")(&e))?,
            None => TemplateStore::builtin(),
        }
        .with_style(cfg.prompt_style);
        Ok(Resources { keywords, lexicon, cues, templates })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("output {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flagged {
    pub id: String,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub processed: usize,
    pub injected: usize,
    pub failed: usize,
    /// Reports that needed at least one re-plan.
    pub replanned: usize,
    pub flagged: usize,
    /// Planned class counts over injected reports.
    pub per_class: BTreeMap<ErrorClass, usize>,
    pub per_split: BTreeMap<Split, usize>,
    pub wall_time_secs: f64,
    pub backend: Backend,
    pub seed: u64,
}

/// Deterministic split from the id alone: 80/10/10 on sha256(id) mod 100.
pub fn hash_split(id: &str) -> Split {
    let digest = Sha256::digest(id.as_bytes());
    let n = u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes")) % 100;
    match n {
        0..=79 => Split::Train,
        80..=89 => Split::Dev,
        _ => Split::Test,
    }
}

struct Done {
    record: ReportRecord,
    rows: Vec<SentenceDatasetRow>,
    replanned: bool,
    flags: Vec<String>,
}

struct Ctx<'a> {
    res: &'a Resources,
    cfg: &'a PipelineConfig,
    profile: &'a TagProfile,
    run_seed: u64,
    client: Option<&'a dyn LlmClient>,
    audit: Option<&'a AuditLog>,
}

fn fail(id: &str, stage: &str, reason: impl ToString) -> Failure {
    Failure { id: id.to_string(), stage: stage.to_string(), reason: reason.to_string() }
}

fn inject(ctx: &Ctx, report: &Report, tags: &TagSet, seed: u64) -> Result<(InjectionResult, u32), Failure> {
    let mut last = None;
    for attempt in 0..ctx.cfg.max_replans.max(1) {
        let s = attempt_seed(seed, attempt);
        let plan = sample_plan(tags, ctx.profile, s).map_err(|e| fail(&report.id, "sample", e))?;
        let outcome = match (ctx.cfg.backend, ctx.client) {
            (Backend::Rules, _) => inject_with_rules_using(&ctx.res.lexicon, &ctx.res.cues, report, &plan, s),
            (Backend::Llm, Some(client)) => {
                inject_with_llm(report, &plan, client, &ctx.res.templates, ctx.cfg.validation, ctx.audit)
            }
            (Backend::Llm, None) => return Err(fail(&report.id, "inject", "no model client configured")),
        };
        match outcome {
            Ok(r) => return Ok((r, attempt)),
            Err(e @ InjectError::NoEligibleSite(_)) => last = Some(e),
            Err(e) => return Err(fail(&report.id, "inject", e)),
        }
    }
    Err(fail(
        &report.id,
        "inject",
        format!(
            "gave up after {} plans: {}",
            ctx.cfg.max_replans.max(1),
            last.map_or_else(String::new, |e| e.to_string())
        ),
    ))
}

fn process(ctx: &Ctx, report: &Report, tags: &TagSet, split: Split) -> Result<Done, Failure> {
    let seed = derive_seed(ctx.run_seed, &report.id);
    let (injected, attempt) = inject(ctx, report, tags, seed)?;
    let error = parse_report(&injected.error_text, &report.id).map_err(|e| fail(&report.id, "segment", e))?;
    let outcome = match (ctx.cfg.splice, ctx.client) {
        (SpliceMode::Llm, Some(client)) => {
            splice_with_llm(client, &ctx.res.templates, &ctx.res.lexicon, &ctx.res.cues, report, &error)
        }
        _ => splice_reports(&ctx.res.lexicon, &ctx.res.cues, report, &error, injected.declared_changes.as_ref()),
    };
    let rows: Vec<SentenceDatasetRow> =
        outcome.records.iter().map(|r| SentenceDatasetRow::from_record(&report.id, r)).collect();
    let record = ReportRecord {
        id: report.id.clone(),
        split,
        ground_truth: report.normalized_text(),
        error_report: error.normalized_text(),
        error_categories: injected.plan.classes().to_vec(),
        index_map: index_map(&outcome.records),
        plan_seed: attempt_seed(seed, attempt),
        backend: injected.backend,
    };
    let mut problems = record.check();
    problems.extend(SentenceDatasetRow::check_all(&rows).into_iter().map(|(_, r)| r));
    if !problems.is_empty() {
        return Err(fail(&report.id, "schema", problems.join("; ")));
    }
    let mut flags = injected.flags;
    flags.extend(outcome.flags);
    Ok(Done { record, rows, replanned: attempt > 0, flags })
}

fn corpus_hash(entries: &[crate::corpus::CorpusEntry]) -> String {
    let mut h = Sha256::new();
    for e in entries {
        h.update(e.id.as_bytes());
        h.update([0]);
        match &e.text {
            Ok(t) => h.update(t.as_bytes()),
            Err(why) => h.update(why.as_bytes()),
        }
        h.update([0]);
    }
    hex::encode(h.finalize())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Output { path: path.display().to_string(), source: std::io::Error::other(e) })?;
    fs::write(path, text + "\n").map_err(|source| PipelineError::Output { path: path.display().to_string(), source })
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("plain data serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| PipelineError::Output { path: path.display().to_string(), source })
}

/// Output file names inside the run directory.
pub mod files {
    pub const REPORTS: &str = "reports.jsonl";
    pub const SENTENCES: &str = "sentences.jsonl";
    pub const MANIFEST: &str = "manifest.json";
    pub const SUMMARY: &str = "summary.json";
    pub const FAILURES: &str = "failures.jsonl";
    pub const FLAGS: &str = "flags.jsonl";
    pub const AUDIT: &str = "audit.jsonl";
}

/// Runs with the HTTP client built from `cfg.llm` when a model is needed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.check()?;
    let needs_model = cfg.backend == Backend::Llm || cfg.splice == SpliceMode::Llm;
    if !needs_model {
        return run_pipeline_with_client(cfg, None);
    }
    #[cfg(feature = "http")]
    {
        use crate::inject::llm::{HttpLlmClient, ResilientClient};
        let http = HttpLlmClient::from_env(cfg.llm.clone()).map_err(|e| ConfigError::Llm(e.to_string()))?;
        let client = ResilientClient::new(http, &cfg.llm);
        run_pipeline_with_client(cfg, Some(&client))
    }
    #[cfg(not(feature = "http"))]
    Err(ConfigError::Llm("built without the http feature".into()).into())
}

/// Runs with a caller-supplied model client (used by tests and embedders).
pub fn run_pipeline_with_client(
    cfg: &PipelineConfig,
    client: Option<&dyn LlmClient>,
) -> Result<RunSummary, PipelineError> {
    let started = Instant::now();
    let run_seed = cfg.check()?;
    let res = Resources::load(cfg)?;
    let manifest_in = cfg.manifest.as_deref().map(SplitManifest::read).transpose()?;
    fs::create_dir_all(&cfg.out)
        .map_err(|source| PipelineError::Output { path: cfg.out.display().to_string(), source })?;
    let audit = if client.is_some() {
        let path = cfg.out.join(files::AUDIT);
        Some(
            AuditLog::open(&path)
                .map_err(|source| PipelineError::Output { path: path.display().to_string(), source })?,
        )
    } else {
        None
    };

    let entries = load_corpus(&cfg.corpus)?;
    let exec = cfg.execution;
    let (parsed, done) = exec.install(cfg.threads, || {
        let parsed: Vec<Result<(Report, TagSet), Failure>> = exec.map(&entries, |e| {
            let text = e.text.as_ref().map_err(|why| fail(&e.id, "read", why))?;
            let report = parse_report(text, &e.id).map_err(|err| fail(&e.id, "parse", err))?;
            let tags = tag_report(&report, &res.keywords);
            Ok((report, tags))
        });
        let tag_sets: Vec<TagSet> = parsed.iter().filter_map(|p| p.as_ref().ok()).map(|(_, t)| t.clone()).collect();
        let profile = match compute_tag_profile(&tag_sets) {
            Ok(p) | Err(ProfileError::AllTagsAbsent { profile: p }) => p,
            Err(_) => TagProfile::uniform(),
        };
        let ctx = Ctx { res: &res, cfg, profile: &profile, run_seed, client, audit: audit.as_ref() };
        let done: Vec<Result<Done, Failure>> = exec.map(&parsed, |p| {
            let (report, tags) = p.as_ref().map_err(Clone::clone)?;
            let split = match &manifest_in {
                Some(m) => m
                    .split_of(&report.id)
                    .ok_or_else(|| fail(&report.id, "split", "id is not listed in the split manifest"))?,
                None => hash_split(&report.id),
            };
            process(&ctx, report, tags, split)
        });
        (parsed.len(), done)
    });

    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut flagged = Vec::new();
    let mut replanned = 0;
    for d in done {
        match d {
            Ok(d) => {
                replanned += usize::from(d.replanned);
                if !d.flags.is_empty() {
                    flagged.push(Flagged { id: d.record.id.clone(), flags: d.flags });
                }
                records.push(d.record);
                rows.extend(d.rows);
            }
            Err(f) => failures.push(f),
        }
    }

    write_report_records(&records, &cfg.out.join(files::REPORTS))?;
    write_sentence_records(&rows, &cfg.out.join(files::SENTENCES))?;
    write_lines(&cfg.out.join(files::FAILURES), &failures)?;
    if !flagged.is_empty() {
        write_lines(&cfg.out.join(files::FLAGS), &flagged)?;
    }
    let mut splits: BTreeMap<Split, Vec<String>> = Split::ALL.iter().map(|s| (*s, Vec::new())).collect();
    for r in &records {
        splits.entry(r.split).or_default().push(r.id.clone());
    }
    let manifest =
        SplitManifest { splits, corpus_hash: corpus_hash(&entries), run_seed, tool_version: TOOL_VERSION.to_string() };
    manifest.write(&cfg.out.join(files::MANIFEST))?;

    let mut per_class = BTreeMap::new();
    let mut per_split = BTreeMap::new();
    for r in &records {
        for c in &r.error_categories {
            *per_class.entry(*c).or_default() += 1;
        }
        *per_split.entry(r.split).or_default() += 1;
    }
    let summary = RunSummary {
        processed: parsed,
        injected: records.len(),
        failed: failures.len(),
        replanned,
        flagged: flagged.len(),
        per_class,
        per_split,
        wall_time_secs: started.elapsed().as_secs_f64(),
        backend: cfg.backend,
        seed: run_seed,
    };
    write_json(&cfg.out.join(files::SUMMARY), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{designed_corpus, write_jsonl_corpus};

    fn config(dir: &Path, n: usize) -> PipelineConfig {
        let corpus = dir.join("corpus.jsonl");
        write_jsonl_corpus(&corpus, &designed_corpus(&[(TagSet::all(), n)], 5, "c")).unwrap();
        PipelineConfig { corpus, out: dir.join("out"), seed: Some(7), ..PipelineConfig::default() }
    }

    #[test]
    fn seed_is_required() {
        let cfg = PipelineConfig { corpus: "x".into(), ..PipelineConfig::default() };
        assert!(matches!(cfg.check(), Err(ConfigError::MissingSeed)));
    }

    #[test]
    fn llm_without_credential_fails_before_work() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), 2);
        cfg.backend = Backend::Llm;
        cfg.llm.endpoint = "http://127.0.0.1:9/v1/chat/completions".into();
        cfg.llm.api_key_env = "RADFAULT_TEST_UNSET_KEY".into();
        assert!(matches!(run_pipeline(&cfg), Err(PipelineError::Config(ConfigError::Llm(_)))));
        assert!(!cfg.out.exists());
    }

    #[test]
    fn summary_counts_add_up() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), 12);
        let s = run_pipeline(&cfg).unwrap();
        assert_eq!(s.processed, 12);
        assert_eq!(s.processed, s.injected + s.failed);
        assert_eq!(s.per_class.values().sum::<usize>(), 3 * s.injected);
        assert!(cfg.out.join(files::MANIFEST).exists());
    }

    #[test]
    fn hash_split_proportions() {
        let mut n = BTreeMap::new();
        for i in 0..10_000 {
            *n.entry(hash_split(&format!("r{i}"))).or_insert(0usize) += 1;
        }
        assert!((7_700..8_300).contains(&n[&Split::Train]), "{n:?}");
        assert!((800..1_200).contains(&n[&Split::Dev]), "{n:?}");
    }

    #[test]
    fn config_parses_from_toml() {
        let cfg = PipelineConfig::from_toml(
            "corpus = \"c.jsonl\"\nseed = 3\nbackend = \"llm\"\nexecution = \"sequential\"\n[llm]\nendpoint = \"http://x\"\nconcurrency = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.backend, Backend::Llm);
        assert_eq!(cfg.llm.concurrency, 2);
        assert_eq!(cfg.llm.model, "gpt-4o");
        assert_eq!(cfg.max_replans, 16);
    }
}
