//! Experiment configuration. A loaded config is resolved into a fully
//! explicit form before anything runs; that form is what the manifest
//! records and hashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use priming::generator::{Condition, ConditionSpec, Construction, SyntheticTextConfig};
use priming::lexicon::DEFAULT_FREQUENCY_CUTOFF;
use priming::metrics::CiMethod;
use priming::scoring::ScoreMode;

use crate::error::{io_err, CliError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub lexicon: LexiconConfig,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<ConditionConfig>,
    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconConfig {
    pub dir: PathBuf,
    #[serde(default = "default_cutoff")]
    pub frequency_cutoff: u32,
}

fn default_cutoff() -> u32 {
    DEFAULT_FREQUENCY_CUTOFF
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    pub name: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets_per_structure: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primes_per_target: Option<usize>,
    /// Defaults to the top-level seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_threshold: Option<f64>,
    /// Defaults to all four target structures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structures: Option<Vec<Construction>>,
}

impl ConditionConfig {
    pub fn named(name: Condition) -> Self {
        Self {
            name,
            targets_per_structure: None,
            primes_per_target: None,
            seed: None,
            similarity_threshold: None,
            structures: None,
        }
    }

    pub fn spec(&self, seed: u64) -> ConditionSpec {
        let mut spec = ConditionSpec::new(self.name, self.seed.unwrap_or(seed));
        if let Some(t) = self.targets_per_structure {
            spec.targets_per_structure = t;
        }
        if let Some(p) = self.primes_per_target {
            spec.primes_per_target = p;
        }
        spec.similarity_threshold = self.similarity_threshold;
        spec
    }

    pub fn structures(&self) -> Vec<Construction> {
        self.structures
            .clone()
            .unwrap_or_else(|| Construction::TARGETS.to_vec())
    }
}

fn default_conditions() -> Vec<ConditionConfig> {
    Condition::all().into_iter().map(ConditionConfig::named).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScorerConfig {
    Uniform {
        #[serde(default = "default_vocab")]
        vocab_size: usize,
    },
    Ngram {
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        training: TrainingSource,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
    Remote {
        /// Overridden by `--scorer-url` or `PRIMING_SCORER_URL`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        url: Option<String>,
        #[serde(default = "default_mode")]
        mode: ScoreMode,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        retries: u32,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
        #[serde(default = "yes")]
        batch: bool,
    },
}

fn default_vocab() -> usize {
    50
}
fn default_order() -> usize {
    3
}
fn default_alpha() -> f64 {
    1.0
}
fn default_in_flight() -> usize {
    4
}
fn default_mode() -> ScoreMode {
    ScoreMode::Causal
}
fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn yes() -> bool {
    true
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::Ngram {
            order: default_order(),
            alpha: default_alpha(),
            training: TrainingSource::default(),
            max_in_flight: default_in_flight(),
        }
    }
}

impl ScorerConfig {
    pub fn max_in_flight(&self) -> usize {
        match self {
            ScorerConfig::Uniform { .. } => 1,
            ScorerConfig::Ngram { max_in_flight, .. } | ScorerConfig::Remote { max_in_flight, .. } => {
                *max_in_flight
            }
        }
    }

    pub fn mode(&self) -> ScoreMode {
        match self {
            ScorerConfig::Remote { mode, .. } => *mode,
            _ => ScoreMode::Causal,
        }
    }
}

/// Where the n-gram scorer's training text comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainingSource {
    /// Dative text sampled from a lexicon (the run's lexicon by default).
    Synthetic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lexicon: Option<PathBuf>,
        #[serde(default = "default_documents")]
        documents: usize,
        #[serde(default = "default_sentences")]
        sentences_per_document: usize,
        #[serde(default = "default_do_share")]
        do_share: f64,
        #[serde(default)]
        seed: u64,
    },
    /// One training line per line of a text file.
    File { path: PathBuf },
}

fn default_documents() -> usize {
    SyntheticTextConfig::default().documents
}
fn default_sentences() -> usize {
    SyntheticTextConfig::default().sentences_per_document
}
fn default_do_share() -> f64 {
    SyntheticTextConfig::default().do_share
}

impl Default for TrainingSource {
    fn default() -> Self {
        TrainingSource::Synthetic {
            lexicon: None,
            documents: default_documents(),
            sentences_per_document: default_sentences(),
            do_share: default_do_share(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default)]
    pub ci_method: CiMethod,
    #[serde(default)]
    pub sample_size: SampleSizeConfig,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            ci_method: CiMethod::StudentT,
            sample_size: SampleSizeConfig::default(),
        }
    }
}

/// Parameters of the Cochran sample-size line printed with every report,
/// next to the corpus size actually used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSizeConfig {
    pub z: f64,
    pub margin: f64,
    pub p: f64,
    pub chosen: u64,
}

impl Default for SampleSizeConfig {
    fn default() -> Self {
        Self {
            z: 2.576,
            margin: 0.01,
            p: 0.5,
            chosen: 15_000,
        }
    }
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: Config = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(cfg.with_paths_relative_to(base))
    }

    /// Interpret relative paths against `base` (the config file's folder).
    pub fn with_paths_relative_to(mut self, base: &Path) -> Self {
        self.lexicon.dir = absolute(base, &self.lexicon.dir);
        if let Some(d) = &self.output.dir {
            self.output.dir = Some(absolute(base, d));
        }
        if let ScorerConfig::Ngram { training, .. } = &mut self.scorer {
            match training {
                TrainingSource::Synthetic { lexicon: Some(l), .. } => *l = absolute(base, l),
                TrainingSource::File { path } => *path = absolute(base, path),
                _ => {}
            }
        }
        self
    }

    /// Every default made explicit, so the result alone reproduces a run.
    pub fn resolved(&self) -> Result<Self, CliError> {
        let mut out = self.clone();
        if out.conditions.is_empty() {
            return Err(CliError::Usage("config lists no conditions".into()));
        }
        for c in &mut out.conditions {
            let spec = c.spec(self.seed);
            spec.validate()
                .map_err(|e| CliError::Usage(format!("condition {}: {e}", c.name.label())))?;
            c.targets_per_structure = Some(spec.targets_per_structure);
            c.primes_per_target = Some(spec.primes_per_target);
            c.seed = Some(spec.seed);
            let structures = c.structures();
            if structures.is_empty() || structures.iter().any(|s| !Construction::TARGETS.contains(s)) {
                return Err(CliError::Usage(format!(
                    "condition {}: structures must be among ACT, PASS, DO, PO",
                    c.name.label()
                )));
            }
            c.structures = Some(structures);
        }
        let mut labels: Vec<String> = out.conditions.iter().map(|c| c.name.label()).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("a condition is listed twice".into()));
        }
        if let ScorerConfig::Ngram { training: TrainingSource::Synthetic { lexicon, .. }, .. } = &mut out.scorer {
            if lexicon.is_none() {
                *lexicon = Some(out.lexicon.dir.clone());
            }
        }
        Ok(out)
    }

    /// Canonical JSON of the resolved config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn condition_specs(&self) -> Vec<(ConditionSpec, Vec<Construction>)> {
        self.conditions
            .iter()
            .map(|c| (c.spec(self.seed), c.structures()))
            .collect()
    }
}
