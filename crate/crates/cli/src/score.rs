//! Scoring corpora into paired log-probabilities, checkpointed per block
//! of targets so an interrupted run resumes where it stopped.

use std::fs::{self, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use priming::generator::{
    join_sentences, synthetic_dative_text, ConditionSpec, Construction, PrimeTargetItem,
    SyntheticTextConfig,
};
use priming::lexicon::DEFAULT_FREQUENCY_CUTOFF;
use priming::metrics::PairedScore;
use priming::scoring::{
    batch_score, NGramModel, RemoteOptions, RemoteScorer, ScoreMode, ScoreRequest, Scorer,
    UniformScorer,
};
use priming::Lexicon;

use crate::config::{ScorerConfig, TrainingSource};
use crate::error::{io_err, CliError};
use crate::files::{check_overwrite, file_sha256, read_corpus, write_atomic};

/// One scored prime pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub condition: ConditionSpec,
    pub structure: Construction,
    pub target_id: String,
    pub prime_pair_index: usize,
    pub lp_congruent: f64,
    pub lp_incongruent: f64,
    pub scorer: String,
}

impl ScoreRow {
    pub fn paired(&self) -> PairedScore {
        PairedScore {
            target_id: self.target_id.clone(),
            prime_pair_index: self.prime_pair_index,
            lp_congruent: self.lp_congruent,
            lp_incongruent: self.lp_incongruent,
        }
    }
}

pub struct BuiltScorer {
    pub scorer: Box<dyn Scorer>,
    /// Training lines when the scorer was trained in-process.
    pub training_text: Option<Vec<String>>,
}

pub fn build_scorer(cfg: &ScorerConfig, url_override: Option<&str>) -> Result<BuiltScorer, CliError> {
    match cfg {
        ScorerConfig::Uniform { vocab_size } => {
            if *vocab_size == 0 {
                return Err(CliError::Usage("uniform scorer needs vocab_size > 0".into()));
            }
            Ok(BuiltScorer {
                scorer: Box::new(UniformScorer::new(*vocab_size)),
                training_text: None,
            })
        }
        ScorerConfig::Ngram {
            order,
            alpha,
            training,
            ..
        } => {
            let text = training_text(training)?;
            let model = NGramModel::train(&text, *order, *alpha)
                .map_err(|e| CliError::Scorer(format!("n-gram training: {e}")))?;
            Ok(BuiltScorer {
                scorer: Box::new(model),
                training_text: Some(text),
            })
        }
        ScorerConfig::Remote {
            url,
            timeout_secs,
            retries,
            batch,
            ..
        } => {
            let url = url_override.or(url.as_deref()).ok_or_else(|| {
                CliError::Usage(
                    "no scorer URL: set PRIMING_SCORER_URL, pass --scorer-url or put `url` in the scorer config"
                        .into(),
                )
            })?;
            let opts = RemoteOptions {
                timeout: Duration::from_secs(*timeout_secs),
                retries: *retries,
                use_batch_endpoint: *batch,
                ..RemoteOptions::default()
            };
            Ok(BuiltScorer {
                scorer: Box::new(RemoteScorer::connect(url, opts)?),
                training_text: None,
            })
        }
    }
}

fn training_text(src: &TrainingSource) -> Result<Vec<String>, CliError> {
    match src {
        TrainingSource::File { path } => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Ok(text.lines().map(str::to_string).collect())
        }
        TrainingSource::Synthetic {
            lexicon,
            documents,
            sentences_per_document,
            do_share,
            seed,
        } => {
            let dir = lexicon
                .as_ref()
                .ok_or_else(|| CliError::Usage("synthetic training text needs a lexicon".into()))?;
            let lex = Lexicon::load_dir(dir, DEFAULT_FREQUENCY_CUTOFF)?;
            let cfg = SyntheticTextConfig {
                documents: *documents,
                sentences_per_document: *sentences_per_document,
                do_share: *do_share,
                seed: *seed,
            };
            Ok(synthetic_dative_text(&lex, &cfg)?)
        }
    }
}

/// Progress record kept next to a partial scores file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    scorer: String,
    mode: ScoreMode,
    inputs: Vec<(String, String)>,
    targets_done: usize,
    bytes: u64,
}

pub fn checkpoint_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".ckpt");
    PathBuf::from(name)
}

/// Targets scored per checkpoint.
const BLOCK: usize = 32;

#[derive(Debug, PartialEq, Eq)]
pub struct ScoreOutcome {
    pub targets: usize,
    pub targets_done: usize,
    pub rows: usize,
    pub resumed_from: usize,
}

impl ScoreOutcome {
    pub fn complete(&self) -> bool {
        self.targets_done == self.targets
    }
}

pub struct ScoreJob<'a> {
    pub inputs: &'a [PathBuf],
    pub out: &'a Path,
    pub mode: ScoreMode,
    pub max_in_flight: usize,
    pub force: bool,
    /// Stop after this many targets in this invocation, leaving a
    /// checkpoint behind.
    pub stop_after: Option<usize>,
}

fn requests(item: &PrimeTargetItem, mode: ScoreMode) -> Vec<ScoreRequest> {
    let target = format!("{}.", item.target.text);
    item.prime_pairs
        .iter()
        .flat_map(|p| {
            [&p.congruent, &p.incongruent].map(|ctx| ScoreRequest {
                context: join_sentences(ctx),
                target: target.clone(),
                mode,
            })
        })
        .collect()
}

pub fn score_files(job: &ScoreJob, scorer: &dyn Scorer) -> Result<ScoreOutcome, CliError> {
    if !scorer.supports(job.mode) {
        return Err(CliError::Scorer(format!(
            "scorer {} does not support {} mode",
            scorer.identity(),
            job.mode.as_str()
        )));
    }
    let mut items = Vec::new();
    let mut inputs = Vec::new();
    for path in job.inputs {
        items.extend(read_corpus(path)?);
        inputs.push((path.display().to_string(), file_sha256(path)?));
    }
    if items.is_empty() {
        return Err(CliError::Validation("no items in the input corpus".into()));
    }
    let identity = scorer.identity();
    let ckpt_path = checkpoint_path(job.out);
    let mut ckpt = Checkpoint {
        scorer: identity.clone(),
        mode: job.mode,
        inputs,
        targets_done: 0,
        bytes: 0,
    };

    let resume = match fs::read_to_string(&ckpt_path) {
        Ok(text) => match serde_json::from_str::<Checkpoint>(&text) {
            Ok(old) if old.scorer == ckpt.scorer && old.mode == ckpt.mode && old.inputs == ckpt.inputs => Some(old),
            _ if job.force => None,
            _ => {
                return Err(CliError::Usage(format!(
                    "{} belongs to a different scoring run; pass --force to start over",
                    ckpt_path.display()
                )))
            }
        },
        Err(_) => {
            check_overwrite(job.out, job.force)?;
            None
        }
    };

    if let Some(dir) = job.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(resume.is_none())
        .open(job.out)
        .map_err(io_err(job.out))?;
    if let Some(old) = resume {
        // Anything past the checkpoint is a torn block; drop it.
        file.set_len(old.bytes).map_err(io_err(job.out))?;
        ckpt.targets_done = old.targets_done;
        ckpt.bytes = old.bytes;
    }
    file.seek(SeekFrom::Start(ckpt.bytes)).map_err(io_err(job.out))?;

    let resumed_from = ckpt.targets_done;
    let budget_end = job
        .stop_after
        .map_or(items.len(), |n| (resumed_from + n).min(items.len()));
    let mut rows = 0;
    while ckpt.targets_done < budget_end {
        let block = &items[ckpt.targets_done..(ckpt.targets_done + BLOCK).min(budget_end)];
        let reqs: Vec<ScoreRequest> = block.iter().flat_map(|it| requests(it, job.mode)).collect();
        let scored = batch_score(&reqs, scorer, job.max_in_flight).map_err(|e| {
            let (i, first) = &e.failures[0];
            let mut at = *i / 2;
            let item = block
                .iter()
                .find(|it| {
                    let n = it.prime_pairs.len();
                    if at < n {
                        true
                    } else {
                        at -= n;
                        false
                    }
                })
                .expect("failure index within block");
            CliError::Scorer(format!(
                "{} of {} requests failed; first at target {} pair {}: {first}",
                e.failures.len(),
                e.total,
                item.id,
                at
            ))
        })?;
        let mut buf = Vec::new();
        let mut k = 0;
        for item in block {
            for (j, _) in item.prime_pairs.iter().enumerate() {
                let row = ScoreRow {
                    condition: item.condition.clone(),
                    structure: item.structure,
                    target_id: item.id.clone(),
                    prime_pair_index: j,
                    lp_congruent: scored[k].log_prob,
                    lp_incongruent: scored[k + 1].log_prob,
                    scorer: identity.clone(),
                };
                k += 2;
                serde_json::to_writer(&mut buf, &row).expect("rows serialize");
                buf.push(b'\n');
                rows += 1;
            }
        }
        file.write_all(&buf).map_err(io_err(job.out))?;
        file.sync_data().map_err(io_err(job.out))?;
        ckpt.targets_done += block.len();
        ckpt.bytes += buf.len() as u64;
        write_atomic(&ckpt_path, serde_json::to_string(&ckpt).expect("checkpoint").as_bytes())?;
    }
    if ckpt.targets_done == items.len() {
        let _ = fs::remove_file(&ckpt_path);
    }
    Ok(ScoreOutcome {
        targets: items.len(),
        targets_done: ckpt.targets_done,
        rows,
        resumed_from,
    })
}
