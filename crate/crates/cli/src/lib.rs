//! Command-line front end: generate, validate, score and report, or all of
//! them at once with `run`.

pub mod config;
pub mod error;
pub mod files;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod score;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use priming::generator::{synthetic_dative_text, Condition, Construction, SyntheticTextConfig};
use priming::lexicon::DEFAULT_FREQUENCY_CUTOFF;
use priming::metrics::CiMethod;
use priming::Lexicon;

use config::{Config, ConditionConfig, LexiconConfig, SampleSizeConfig, ScorerConfig, TrainingSource};
use error::CliError;
use files::DirLock;
use manifest::{unix_now, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "priming", version, about = "Structural-priming corpus toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate prime/target corpora, one JSONL file per condition and structure.
    Generate(GenerateArgs),
    /// Check corpus files against every constraint of their condition.
    Validate(ValidateArgs),
    /// Score corpora with a language-model scorer.
    Score(ScoreArgs),
    /// Aggregate score files into CSV/JSON reports and plot tables.
    Report(ReportArgs),
    /// Generate, validate, score and report in one go.
    Run(RunArgs),
    /// Write synthetic dative training text for the n-gram scorer.
    SynthTrain(SynthArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// JSON config; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Condition label, e.g. core, recency_2, complexity_both. Repeatable.
    #[arg(long = "condition")]
    conditions: Vec<Condition>,
    /// Target structure (ACT, PASS, DO, PO). Repeatable.
    #[arg(long = "structure")]
    structures: Vec<Construction>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    primes_per_target: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lexicon_dir: Option<PathBuf>,
    #[arg(long)]
    frequency_cutoff: Option<u32>,
    #[arg(long)]
    out: PathBuf,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "data/lexicon")]
    lexicon_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FREQUENCY_CUTOFF)]
    frequency_cutoff: u32,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScorerKind {
    Uniform,
    Ngram,
    Remote,
}

#[derive(Debug, Args)]
struct ScorerArgs {
    #[arg(long, value_enum, default_value = "ngram")]
    scorer: ScorerKind,
    /// Uniform scorer vocabulary size.
    #[arg(long, default_value_t = 50)]
    vocab_size: usize,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// N-gram training text, one sentence per line. Without it the
    /// scorer trains on synthetic dative text from --train-lexicon-dir.
    #[arg(long)]
    train_text: Option<PathBuf>,
    #[arg(long, default_value = "data/lexicon")]
    train_lexicon_dir: PathBuf,
    #[arg(long)]
    train_documents: Option<usize>,
    #[arg(long)]
    train_do_share: Option<f64>,
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    /// Scorer-service base URL.
    #[arg(long, env = "PRIMING_SCORER_URL")]
    scorer_url: Option<String>,
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,
}

impl ScorerArgs {
    fn config(&self) -> ScorerConfig {
        match self.scorer {
            ScorerKind::Uniform => ScorerConfig::Uniform {
                vocab_size: self.vocab_size,
            },
            ScorerKind::Ngram => {
                let training = match &self.train_text {
                    Some(path) => TrainingSource::File { path: path.clone() },
                    None => {
                        let d = SyntheticTextConfig::default();
                        TrainingSource::Synthetic {
                            lexicon: Some(self.train_lexicon_dir.clone()),
                            documents: self.train_documents.unwrap_or(d.documents),
                            sentences_per_document: d.sentences_per_document,
                            do_share: self.train_do_share.unwrap_or(d.do_share),
                            seed: self.train_seed,
                        }
                    }
                };
                ScorerConfig::Ngram {
                    order: self.order,
                    alpha: self.alpha,
                    training,
                    max_in_flight: self.max_in_flight,
                }
            }
            ScorerKind::Remote => ScorerConfig::Remote {
                url: self.scorer_url.clone(),
                mode: priming::scoring::ScoreMode::Causal,
                timeout_secs: self.timeout_secs,
                retries: self.retries,
                max_in_flight: self.max_in_flight,
                batch: true,
            },
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "scores.jsonl")]
    out: PathBuf,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long)]
    force: bool,
    /// Stop after this many targets, leaving a checkpoint to resume from.
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "student-t")]
    ci_method: CiArg,
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CiArg {
    StudentT,
    Normal,
}

impl From<CiArg> for CiMethod {
    fn from(c: CiArg) -> Self {
        match c {
            CiArg::StudentT => CiMethod::StudentT,
            CiArg::Normal => CiMethod::Normal,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Repeat the run recorded in a manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Defaults to the config's output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "PRIMING_SCORER_URL")]
    scorer_url: Option<String>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value = "data/lexicon")]
    lexicon_dir: PathBuf,
    #[arg(long)]
    documents: Option<usize>,
    #[arg(long)]
    sentences_per_document: Option<usize>,
    #[arg(long)]
    do_share: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

fn generate_config(a: &GenerateArgs) -> Result<Config, CliError> {
    let mut cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config {
            seed: 0,
            lexicon: LexiconConfig {
                dir: PathBuf::from("data/lexicon"),
                frequency_cutoff: DEFAULT_FREQUENCY_CUTOFF,
            },
            conditions: Condition::all().into_iter().map(ConditionConfig::named).collect(),
            scorer: ScorerConfig::default(),
            output: Default::default(),
            report: Default::default(),
        },
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
        for c in &mut cfg.conditions {
            c.seed = None;
        }
    }
    if let Some(d) = &a.lexicon_dir {
        cfg.lexicon.dir = d.clone();
    }
    if let Some(f) = a.frequency_cutoff {
        cfg.lexicon.frequency_cutoff = f;
    }
    if !a.conditions.is_empty() {
        cfg.conditions = a.conditions.iter().copied().map(ConditionConfig::named).collect();
    }
    for c in &mut cfg.conditions {
        if a.targets.is_some() {
            c.targets_per_structure = a.targets;
        }
        if a.primes_per_target.is_some() {
            c.primes_per_target = a.primes_per_target;
        }
        if !a.structures.is_empty() {
            c.structures = Some(a.structures.clone());
        }
    }
    cfg.resolved()
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let cfg = generate_config(a)?;
    let _lock = DirLock::acquire(&a.out)?;
    files::check_overwrite(&a.out.join(manifest::MANIFEST_FILE), a.force)?;
    let mut manifest = RunManifest::new(&cfg, unix_now())?;
    let lex = Lexicon::load_dir(&cfg.lexicon.dir, cfg.lexicon.frequency_cutoff)?;
    let written = pipeline::generate_corpora(&cfg, &lex, &a.out, a.force)?;
    manifest.add_artifacts(&a.out, &written)?;
    let path = manifest.write(&a.out)?;
    let pairs: u64 = written
        .iter()
        .map(|p| files::read_corpus(p).map(|v| v.iter().map(|i| i.prime_pairs.len() as u64).sum::<u64>()))
        .sum::<Result<u64, CliError>>()?;
    eprintln!("wrote {} corpus files ({pairs} prime/target pairs); manifest {}", written.len(), path.display());
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), CliError> {
    let lex = Lexicon::load_dir(&a.lexicon_dir, a.frequency_cutoff)?;
    let report = pipeline::validate_files(&a.files, &lex)?;
    files::emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")));
    if report.ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} constraint violations in {} items",
            report.violations.len(),
            report.items
        )))
    }
}

fn cmd_score(a: &ScoreArgs) -> Result<(), CliError> {
    let cfg = a.scorer.config();
    let built = score::build_scorer(&cfg, a.scorer.scorer_url.as_deref())?;
    let lock_dir = a.out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let _lock = DirLock::acquire(lock_dir)?;
    let outcome = score::score_files(
        &score::ScoreJob {
            inputs: &a.files,
            out: &a.out,
            mode: cfg.mode(),
            max_in_flight: cfg.max_in_flight(),
            force: a.force,
            stop_after: a.stop_after,
        },
        built.scorer.as_ref(),
    )?;
    if outcome.complete() {
        eprintln!(
            "scored {} targets ({} new rows) with {}",
            outcome.targets,
            outcome.rows,
            built.scorer.identity()
        );
    } else {
        eprintln!(
            "stopped after {} of {} targets; rerun the same command to resume",
            outcome.targets_done, outcome.targets
        );
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let rows = report::read_scores(&a.files)?;
    let r = report::build_report(&rows, a.ci_method.into(), &SampleSizeConfig::default())?;
    let _lock = DirLock::acquire(&a.out)?;
    report::write_report(&r, &a.out, a.force)?;
    files::emit(&r.sample_size.lines());
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let cfg = match (&a.config, &a.manifest) {
        (_, Some(m)) => {
            let m = RunManifest::load(m)?;
            m.verify_inputs()?;
            m.config
        }
        (Some(c), None) => Config::load(c)?.resolved()?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let out = a
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output.dir".into()))?;
    let m = pipeline::run(
        &cfg,
        &pipeline::RunOptions {
            out: &out,
            force: a.force,
            scorer_url: a.scorer_url.as_deref(),
        },
    )?;
    eprintln!("run complete: {} artifacts in {}", m.artifacts.len(), out.display());
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let d = SyntheticTextConfig::default();
    let cfg = SyntheticTextConfig {
        documents: a.documents.unwrap_or(d.documents),
        sentences_per_document: a.sentences_per_document.unwrap_or(d.sentences_per_document),
        do_share: a.do_share.unwrap_or(d.do_share),
        seed: a.seed,
    };
    let lex = Lexicon::load_dir(&a.lexicon_dir, DEFAULT_FREQUENCY_CUTOFF)?;
    let lines = synthetic_dative_text(&lex, &cfg)?;
    pipeline::write_lines(&a.out, &lines, a.force)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Score(a) => cmd_score(a),
        Command::Report(a) => cmd_report(a),
        Command::Run(a) => cmd_run(a),
        Command::SynthTrain(a) => cmd_synth(a),
    }
}

/// Parse and execute; returns the process exit code. Errors go to stderr
/// as a readable line followed by a JSON record.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::Usage(e.kind().to_string());
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
