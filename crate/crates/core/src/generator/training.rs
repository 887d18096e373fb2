use rand::Rng;
use serde::{Deserialize, Serialize};

use super::build::GenerationError;
use super::condition::InvalidCondition;
use super::realize::realize;
use super::sampler::{stream, Failures, Plan, Pools};
use super::types::*;
use crate::lexicon::Lexicon;

/// Shape of a synthetic dative training text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTextConfig {
    pub documents: usize,
    pub sentences_per_document: usize,
    /// Probability that a sentence is double-object rather than
    /// prepositional-object.
    pub do_share: f64,
    pub seed: u64,
}

impl Default for SyntheticTextConfig {
    fn default() -> Self {
        Self {
            documents: 4000,
            sentences_per_document: 5,
            do_share: 0.9,
            seed: 0,
        }
    }
}

/// Plausible dative sentences grouped into documents, one line per
/// document, sentences joined like scored contexts.
pub fn synthetic_dative_text(
    lex: &Lexicon,
    cfg: &SyntheticTextConfig,
) -> Result<Vec<String>, GenerationError> {
    if !(0.0..=1.0).contains(&cfg.do_share) {
        return Err(InvalidCondition(format!("do_share {} outside [0, 1]", cfg.do_share)).into());
    }
    if cfg.documents == 0 || cfg.sentences_per_document == 0 {
        return Err(InvalidCondition("synthetic text needs documents and sentences".into()).into());
    }
    let pools = Pools::new(lex, None);
    let mut rng = stream(cfg.seed, &[0x0074_7261_696e]);
    let mut fails = Failures::default();
    let mut docs = Vec::with_capacity(cfg.documents);
    for _ in 0..cfg.documents {
        let mut sentences = Vec::with_capacity(cfg.sentences_per_document);
        for _ in 0..cfg.sentences_per_document {
            let construction = if rng.random_bool(cfg.do_share) {
                Construction::Do
            } else {
                Construction::Po
            };
            let det = if rng.random_bool(0.5) {
                Determiner::Definite
            } else {
                Determiner::Indefinite
            };
            let plan = Plan::free(construction, Tense::Past, det);
            let spec = pools
                .sample(&plan, &mut rng, &mut fails, |_| true)
                .ok_or_else(|| GenerationError::Exhausted {
                    condition: "synthetic_text".into(),
                    structure: construction,
                    constraint: fails.worst().unwrap_or("selectional_restriction").into(),
                    produced: docs.len(),
                    requested: cfg.documents,
                })?;
            sentences.push(realize(&spec, lex)?);
        }
        docs.push(join_sentences(&sentences));
    }
    Ok(docs)
}
