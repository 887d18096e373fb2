use super::tokenize::tokenize;
use super::{ScoreError, ScoreMode, ScoreRequest, ScoredSequence, Scorer};

/// Assigns probability 1/V to every target token regardless of context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformScorer {
    vocab_size: usize,
}

impl UniformScorer {
    /// # Panics
    /// If `vocab_size` is zero.
    pub fn new(vocab_size: usize) -> Self {
        assert!(vocab_size > 0, "vocabulary size must be positive");
        Self { vocab_size }
    }
}

impl Scorer for UniformScorer {
    fn identity(&self) -> String {
        format!("uniform(V={})", self.vocab_size)
    }

    fn supports(&self, _: ScoreMode) -> bool {
        true
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoredSequence, ScoreError> {
        let tokens = tokenize(&request.target);
        if tokens.is_empty() {
            return Err(ScoreError::EmptyTarget);
        }
        let lp = -(self.vocab_size as f64).ln();
        let lps = vec![lp; tokens.len()];
        Ok(ScoredSequence::from_tokens(tokens, lps))
    }
}
