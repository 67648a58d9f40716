use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use radfault::corpus::load_corpus;
use radfault::dataset::{read_and_validate, ReadMode, ReportRecord, SentenceDatasetRow, Split, Violation};
use radfault::exec::Execution;
use radfault::inject::llm::{AuditLog, LlmClient};
use radfault::inject::rules::inject_with_rules_using;
use radfault::inject::{inject_with_llm, Backend};
use radfault::pipeline::{files, run_pipeline, PipelineConfig, PipelineError, Resources};
use radfault::report::{parse_report, Report};
use radfault::review::{
    review_session, ReviewError, ReviewLog, ReviewPair, ScriptedVerdicts, TerminalVerdicts, VerdictSource,
};
use radfault::sampler::{context_distribution, derive_seed, plan_probability, sample_plan};
use radfault::splice::{splice_reports, splice_with_llm};
use radfault::stats::{compute_distribution, export_distribution_csv, render_table};
use radfault::tagger::{compute_tag_profile, tag_report, ProfileError, TagProfile, TagSet};

/// Categorized error injection for radiology report corpora.
#[derive(Parser)]
#[command(name = "radfault", version)]
struct Cli {
    /// Run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Output directory or file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Rules,
    Llm,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Rules => Backend::Rules,
            BackendArg::Llm => Backend::Llm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKind {
    Auto,
    Reports,
    Sentences,
}

#[derive(Subcommand)]
enum Command {
    /// Print the context tags of every report.
    Tag { corpus: PathBuf },
    /// Emit the corpus tag profile as JSON.
    Profile { corpus: PathBuf },
    /// Print context-slot probabilities and sampled plans for a tag set.
    Sample {
        /// Comma-separated tags; empty for none.
        #[arg(long, default_value = "")]
        tags: String,
        /// Profile JSON as written by `profile`.
        #[arg(long, conflicts_with = "corpus")]
        profile: Option<PathBuf>,
        /// Compute the profile from this corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Number of plans to draw.
        #[arg(short, long, default_value_t = 0)]
        n: usize,
    },
    /// Inject three errors into a single report.
    Inject {
        report: PathBuf,
        #[arg(long, default_value = "report")]
        id: String,
    },
    /// Run the full pipeline.
    Run {
        /// Corpus path, overriding the config.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        sequential: bool,
    },
    /// Align and label an existing original/error pair.
    Splice {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        error: PathBuf,
    },
    /// Error distribution per split.
    Stats {
        /// Run directory or reports JSONL.
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Plausibility review of paired reports.
    Review {
        /// Run directory or reports JSONL.
        input: PathBuf,
        /// Verdict log (append-only JSONL).
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "reviewer")]
        reviewer: String,
        /// Verdicts file instead of terminal prompts.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Review only the first N pairs.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Schema-check a dataset file or run directory.
    Validate {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        kind: DatasetKind,
    },
}

/// Violations were printed; exit with code 1.
#[derive(Debug)]
struct ValidationFailed;

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("validation failed")
    }
}

impl std::error::Error for ValidationFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ValidationFailed>() => ExitCode::from(1),
        // Output piped into `head` and friends.
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_path(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(b) = cli.backend {
        cfg.backend = b.into();
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn model_client(cfg: &PipelineConfig) -> Result<Box<dyn LlmClient>> {
    cfg.llm.check().map_err(|e| anyhow!("llm backend: {e}"))?;
    #[cfg(feature = "http")]
    {
        use radfault::inject::llm::{HttpLlmClient, ResilientClient};
        let http = HttpLlmClient::from_env(cfg.llm.clone())?;
        Ok(Box::new(ResilientClient::new(http, &cfg.llm)))
    }
    #[cfg(not(feature = "http"))]
    anyhow::bail!("built without the http feature")
}

fn parsed_corpus(path: &Path, cfg: &PipelineConfig) -> Result<(Resources, Vec<Report>)> {
    let res = Resources::load(cfg)?;
    let mut reports = Vec::new();
    for e in load_corpus(path)? {
        match e.text.map_err(|why| anyhow!(why)).and_then(|t| Ok(parse_report(&t, &e.id)?)) {
            Ok(r) => reports.push(r),
            Err(why) => eprintln!("skipping {}: {why}", e.id),
        }
    }
    Ok((res, reports))
}

fn profile_of(res: &Resources, reports: &[Report]) -> Result<TagProfile> {
    let tags: Vec<TagSet> = reports.iter().map(|r| tag_report(r, &res.keywords)).collect();
    match compute_tag_profile(&tags) {
        Ok(p) => Ok(p),
        Err(ProfileError::AllTagsAbsent { profile }) => {
            eprintln!("warning: no context tag occurs in the corpus");
            Ok(profile)
        }
        Err(e) => Err(e.into()),
    }
}

fn read_report(path: &Path, id: &str) -> Result<Report> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_report(&text, id)?)
}

fn dataset_file(input: &Path, name: &str) -> PathBuf {
    if input.is_dir() {
        input.join(name)
    } else {
        input.to_path_buf()
    }
}

fn print_violations(path: &Path, violations: &[Violation]) -> io::Result<()> {
    let mut out = io::stdout().lock();
    for v in violations {
        writeln!(out, "{}:{}: {}", path.display(), v.at, v.reason)?;
    }
    Ok(())
}

fn guess_kind(path: &Path) -> Result<DatasetKind> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    for line in io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        return Ok(if line.contains("\"report_id\"") { DatasetKind::Sentences } else { DatasetKind::Reports });
    }
    Ok(DatasetKind::Reports)
}

fn validate_file(path: &Path, kind: DatasetKind) -> Result<usize> {
    let kind = match kind {
        DatasetKind::Auto => guess_kind(path)?,
        k => k,
    };
    let (n, violations) = match kind {
        DatasetKind::Sentences => {
            let out = read_and_validate::<SentenceDatasetRow>(path, ReadMode::Permissive)?;
            (out.records.len(), out.violations)
        }
        _ => {
            let out = read_and_validate::<ReportRecord>(path, ReadMode::Permissive)?;
            (out.records.len(), out.violations)
        }
    };
    print_violations(path, &violations)?;
    writeln!(io::stdout(), "{}: {n} valid, {} violation(s)", path.display(), violations.len())?;
    Ok(violations.len())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Tag { corpus } => {
            let cfg = load_config(cli)?;
            let (res, reports) = parsed_corpus(corpus, &cfg)?;
            let mut out = io::stdout().lock();
            for r in &reports {
                writeln!(out, "{}\t{}", r.id, tag_report(r, &res.keywords))?;
            }
        }
        Command::Profile { corpus } => {
            let cfg = load_config(cli)?;
            let (res, reports) = parsed_corpus(corpus, &cfg)?;
            writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&profile_of(&res, &reports)?)?)?;
        }
        Command::Sample { tags, profile, corpus, n } => {
            let cfg = load_config(cli)?;
            let tags: TagSet = tags.parse().map_err(|e| anyhow!("{e}"))?;
            let profile = match (profile, corpus) {
                (Some(p), _) => serde_json::from_str(&std::fs::read_to_string(p)?)
                    .with_context(|| format!("reading profile {}", p.display()))?,
                (None, Some(c)) => {
                    let (res, reports) = parsed_corpus(c, &cfg)?;
                    profile_of(&res, &reports)?
                }
                (None, None) => TagProfile::uniform(),
            };
            let (dist, fell_back) = context_distribution(&tags, &profile)?;
            writeln!(io::stdout(), "tags: {}", if tags.is_empty() { "(none)".to_string() } else { tags.to_string() })?;
            writeln!(io::stdout(), "fallback: {fell_back}")?;
            writeln!(io::stdout(), "context slot:")?;
            for (class, p) in &dist {
                writeln!(io::stdout(), "  {:<26}{p:.4}", class.identifier())?;
            }
            let seed = cfg.seed.unwrap_or(0);
            for i in 0..*n {
                let plan = sample_plan(&tags, &profile, derive_seed(seed, &i.to_string()))?;
                let p = plan_probability(&plan, &tags, &profile)?;
                let [c, a, l] = plan.classes();
                writeln!(io::stdout(), "plan {i}: {c}, {a}, {l}\tp={p:.6}")?;
            }
        }
        Command::Inject { report, id } => {
            let cfg = load_config(cli)?;
            let seed = cfg.seed.ok_or_else(|| anyhow!("--seed is required"))?;
            let res = Resources::load(&cfg)?;
            let report = read_report(report, id)?;
            let tags = tag_report(&report, &res.keywords);
            let seed = derive_seed(seed, &report.id);
            let plan = sample_plan(&tags, &TagProfile::uniform(), seed)?;
            let result = match cfg.backend {
                Backend::Rules => inject_with_rules_using(&res.lexicon, &res.cues, &report, &plan, seed)?,
                Backend::Llm => {
                    let client = model_client(&cfg)?;
                    let audit = cli.out.as_deref().map(|d| AuditLog::open(&d.join(files::AUDIT))).transpose()?;
                    inject_with_llm(&report, &plan, client.as_ref(), &res.templates, cfg.validation, audit.as_ref())?
                }
            };
            writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&result)?)?;
        }
        Command::Run { corpus, threads, sequential } => {
            let mut cfg = load_config(cli)?;
            if let Some(c) = corpus {
                cfg.corpus = c.clone();
            }
            if threads.is_some() {
                cfg.threads = *threads;
            }
            if *sequential {
                cfg.execution = Execution::Sequential;
            }
            let summary = match run_pipeline(&cfg) {
                Ok(s) => s,
                Err(PipelineError::Dataset(e)) => {
                    eprintln!("{e}");
                    return Err(ValidationFailed.into());
                }
                Err(e) => return Err(e.into()),
            };
            writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&summary)?)?;
        }
        Command::Splice { original, error } => {
            let cfg = load_config(cli)?;
            let res = Resources::load(&cfg)?;
            let o = read_report(original, "original")?;
            let e = read_report(error, "error")?;
            let outcome = match cfg.backend {
                Backend::Rules => splice_reports(&res.lexicon, &res.cues, &o, &e, None),
                Backend::Llm => {
                    let client = model_client(&cfg)?;
                    splice_with_llm(client.as_ref(), &res.templates, &res.lexicon, &res.cues, &o, &e)
                }
            };
            for f in &outcome.flags {
                eprintln!("flag: {f}");
            }
            let mut out = io::stdout().lock();
            for r in &outcome.records {
                writeln!(out, "{}", serde_json::to_string(&SentenceDatasetRow::from_record("pair", r))?)?;
            }
        }
        Command::Stats { input, csv } => {
            let path = dataset_file(input, files::REPORTS);
            let records = read_and_validate::<ReportRecord>(&path, ReadMode::Strict)?.records;
            let exec = Execution::default();
            let mut tables = Vec::new();
            for split in Split::ALL {
                if records.iter().any(|r| r.split == split) {
                    tables.push(compute_distribution(&records, Some(split), exec)?);
                }
            }
            tables.push(compute_distribution(&records, None, exec)?);
            write!(io::stdout(), "{}", render_table(&tables))?;
            if let Some(p) = csv {
                export_distribution_csv(&tables, p)?;
            }
        }
        Command::Review { input, log, reviewer, script, limit } => {
            let path = dataset_file(input, files::REPORTS);
            let records = read_and_validate::<ReportRecord>(&path, ReadMode::Strict)?.records;
            let mut pairs: Vec<ReviewPair> = records.iter().map(ReviewPair::from).collect();
            if let Some(n) = limit {
                pairs.truncate(*n);
            }
            let mut log = ReviewLog::open(log)?;
            let stdin = io::stdin();
            let mut source: Box<dyn VerdictSource> = match script {
                Some(p) => Box::new(ScriptedVerdicts::from_path(p)?),
                None => Box::new(TerminalVerdicts::new(stdin.lock(), io::stdout())),
            };
            match review_session(&pairs, source.as_mut(), &mut log, reviewer) {
                Ok(summary) => write!(io::stdout(), "{}", summary.render())?,
                Err(ReviewError::AbortedSession { persisted }) => {
                    writeln!(io::stdout(), "session stopped; {persisted} verdict(s) saved, rerun to resume")?;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Validate { input, kind } => {
            let bad = if input.is_dir() {
                validate_file(&input.join(files::REPORTS), DatasetKind::Reports)?
                    + validate_file(&input.join(files::SENTENCES), DatasetKind::Sentences)?
            } else {
                validate_file(input, *kind)?
            };
            if bad > 0 {
                return Err(ValidationFailed.into());
            }
        }
    }
    Ok(())
}
