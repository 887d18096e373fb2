//! Template realization and corpus construction.

mod build;
mod condition;
mod realize;
mod sampler;
mod training;
mod types;

pub use build::{build_corpus, build_structure, core_similarity_threshold, GenerationError};
pub use condition::{ComplexityMode, Condition, ConditionSpec, InvalidCondition};
pub use realize::{alternate, indefinite_article, padding_sentence, realize, RealizeError};
pub use training::{synthetic_dative_text, SyntheticTextConfig};
pub use types::*;
