//! Structural-priming corpora for language models.
//!
//! [`lexicon`] loads the curated word lists, [`generator`] builds
//! prime/target items under each experimental condition and checks them
//! with an independent validator, [`scoring`] turns items into conditional
//! log-probabilities, and [`metrics`] reduces scores to priming effects.

pub mod generator;
pub mod grammar;
pub mod lexicon;
pub mod metrics;
pub mod scoring;
pub mod validator;

pub use lexicon::{Lexicon, LexiconError};
