//! Conditional log-probability scorers.
//!
//! A scorer returns, for a target string conditioned on a context string,
//! the natural-log probability of every target token. Context tokens are
//! conditioned on but never scored.

mod ngram;
mod remote;
mod tokenize;
mod uniform;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ngram::{NGramModel, NGramError, BOS, EOS, UNK};
pub use remote::{RemoteOptions, RemoteScorer};
pub use tokenize::{tokenize, tokenize_target};
pub use uniform::UniformScorer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    Causal,
    MaskedPll,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Causal => "causal",
            ScoreMode::MaskedPll => "masked_pll",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub context: String,
    pub target: String,
    pub mode: ScoreMode,
}

impl ScoreRequest {
    pub fn causal(context: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            context: context.into(),
            target: target.into(),
            mode: ScoreMode::Causal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub tokens: Vec<String>,
    pub token_log_probs: Vec<f64>,
    pub log_prob: f64,
}

impl ScoredSequence {
    /// Builds the sequence with `log_prob` summed from the token terms.
    pub fn from_tokens(tokens: Vec<String>, token_log_probs: Vec<f64>) -> Self {
        let log_prob = token_log_probs.iter().sum();
        Self {
            tokens,
            token_log_probs,
            log_prob,
        }
    }
}

#[derive(Clone, Debug, Error)]
pub enum ScoreError {
    #[error("scorer `{scorer}` does not support {} mode", mode.as_str())]
    UnsupportedMode { scorer: String, mode: ScoreMode },
    #[error("empty target")]
    EmptyTarget,
    #[error("cannot reach scorer at {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("scorer at {endpoint} answered HTTP {status}: {body}")]
    Service {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("invalid response from {endpoint}: {message}")]
    InvalidResponse { endpoint: String, message: String },
}

impl ScoreError {
    /// Transport problems are worth retrying; everything else is final.
    pub fn is_transient(&self) -> bool {
        matches!(self, ScoreError::Transport { .. })
            || matches!(self, ScoreError::Service { status, .. } if *status >= 500)
    }
}

/// Anything that scores a target given a context.
pub trait Scorer: Sync {
    /// Stable description recorded alongside scores, e.g. a model id or
    /// the n-gram parameters.
    fn identity(&self) -> String;

    fn supports(&self, mode: ScoreMode) -> bool;

    fn score(&self, request: &ScoreRequest) -> Result<ScoredSequence, ScoreError>;

    /// Score several requests at once. Implementations with a batch
    /// endpoint override this; the default scores one at a time.
    fn score_chunk(&self, requests: &[ScoreRequest]) -> Vec<Result<ScoredSequence, ScoreError>> {
        requests.iter().map(|r| self.score(r)).collect()
    }
}

#[derive(Debug, Error)]
#[error("{} of {total} requests failed; first at index {}: {}", failures.len(), failures[0].0, failures[0].1)]
pub struct BatchError {
    pub total: usize,
    pub failures: Vec<(usize, ScoreError)>,
}

/// Requests per chunk handed to a worker.
const CHUNK: usize = 16;

type Slot = Mutex<Option<Vec<Result<ScoredSequence, ScoreError>>>>;

/// Score all requests with at most `max_in_flight` chunks outstanding.
/// Results are positionally aligned with `requests` and do not depend on
/// scheduling.
pub fn batch_score<S: Scorer + ?Sized>(
    requests: &[ScoreRequest],
    scorer: &S,
    max_in_flight: usize,
) -> Result<Vec<ScoredSequence>, BatchError> {
    if requests.is_empty() {
        return Ok(Vec::new());
    }
    let chunks: Vec<&[ScoreRequest]> = requests.chunks(CHUNK).collect();
    let workers = max_in_flight.max(1).min(chunks.len());
    let next = AtomicUsize::new(0);
    let slots: Vec<Slot> =
        chunks.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(chunk) = chunks.get(i) else { break };
                let results = scorer.score_chunk(chunk);
                *slots[i].lock().expect("slot lock") = Some(results);
            });
        }
    });
    let mut out = Vec::with_capacity(requests.len());
    let mut failures = Vec::new();
    for (c, slot) in slots.into_iter().enumerate() {
        let results = slot.into_inner().expect("slot lock").expect("every chunk scored");
        for (j, r) in results.into_iter().enumerate() {
            match r {
                Ok(s) => out.push(s),
                Err(e) => failures.push((c * CHUNK + j, e)),
            }
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(BatchError {
            total: requests.len(),
            failures,
        })
    }
}
