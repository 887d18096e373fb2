use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TARGETS_PER_STRUCTURE: usize = 1500;
pub const DEFAULT_PRIMES_PER_TARGET: usize = 10;

#[derive(Debug, Error, PartialEq)]
#[error("invalid condition: {0}")]
pub struct InvalidCondition(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComplexityMode {
    Prime,
    Target,
    Both,
}

impl ComplexityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ComplexityMode::Prime => "prime",
            ComplexityMode::Target => "target",
            ComplexityMode::Both => "both",
        }
    }
}

/// Experimental condition with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Condition {
    Core,
    SemSimVerb,
    SemSimNouns,
    SemSimAll,
    OverlapRandomNoun,
    OverlapAllNouns,
    OverlapVerb,
    OverlapFunctionWords,
    Identical,
    ImplausiblePrime,
    /// Prime position in a four-sentence context; 1 is farthest from the
    /// target, 4 immediately precedes it.
    Recency(u8),
    /// Number of congruent primes in the context.
    Cumulative(u8),
    Complexity(ComplexityMode),
}

impl Condition {
    /// Every condition of the default experiment matrix.
    pub fn all() -> Vec<Condition> {
        let mut out = vec![
            Condition::Core,
            Condition::SemSimVerb,
            Condition::SemSimNouns,
            Condition::SemSimAll,
            Condition::OverlapRandomNoun,
            Condition::OverlapAllNouns,
            Condition::OverlapVerb,
            Condition::OverlapFunctionWords,
            Condition::Identical,
            Condition::ImplausiblePrime,
        ];
        out.extend((1..=4).map(Condition::Recency));
        out.extend((1..=5).map(Condition::Cumulative));
        out.extend(
            [ComplexityMode::Prime, ComplexityMode::Target, ComplexityMode::Both]
                .map(Condition::Complexity),
        );
        out
    }

    pub fn label(&self) -> String {
        match self {
            Condition::Core => "core".into(),
            Condition::SemSimVerb => "sem_sim_verb".into(),
            Condition::SemSimNouns => "sem_sim_nouns".into(),
            Condition::SemSimAll => "sem_sim_all".into(),
            Condition::OverlapRandomNoun => "overlap_random_noun".into(),
            Condition::OverlapAllNouns => "overlap_all_nouns".into(),
            Condition::OverlapVerb => "overlap_verb".into(),
            Condition::OverlapFunctionWords => "overlap_function_words".into(),
            Condition::Identical => "identical".into(),
            Condition::ImplausiblePrime => "implausible_prime".into(),
            Condition::Recency(p) => format!("recency_{p}"),
            Condition::Cumulative(k) => format!("cumulative_{k}"),
            Condition::Complexity(m) => format!("complexity_{}", m.as_str()),
        }
    }

    pub fn is_semantic_similarity(&self) -> bool {
        matches!(
            self,
            Condition::SemSimVerb | Condition::SemSimNouns | Condition::SemSimAll
        )
    }

    pub fn validate(&self) -> Result<(), InvalidCondition> {
        match *self {
            Condition::Recency(p) if !(1..=4).contains(&p) => Err(InvalidCondition(format!(
                "recency position must be 1..4, got {p}"
            ))),
            Condition::Cumulative(k) if !(1..=5).contains(&k) => Err(InvalidCondition(format!(
                "cumulative prime count must be 1..5, got {k}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Condition {
    type Err = InvalidCondition;

    /// Accepts labels such as `core`, `recency_2`, `recency:2` or
    /// `complexity_both`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace(':', "_");
        let simple = match s.as_str() {
            "core" => Some(Condition::Core),
            "sem_sim_verb" => Some(Condition::SemSimVerb),
            "sem_sim_nouns" => Some(Condition::SemSimNouns),
            "sem_sim_all" => Some(Condition::SemSimAll),
            "overlap_random_noun" => Some(Condition::OverlapRandomNoun),
            "overlap_all_nouns" => Some(Condition::OverlapAllNouns),
            "overlap_verb" => Some(Condition::OverlapVerb),
            "overlap_function_words" => Some(Condition::OverlapFunctionWords),
            "identical" => Some(Condition::Identical),
            "implausible_prime" => Some(Condition::ImplausiblePrime),
            "complexity_prime" => Some(Condition::Complexity(ComplexityMode::Prime)),
            "complexity_target" => Some(Condition::Complexity(ComplexityMode::Target)),
            "complexity_both" => Some(Condition::Complexity(ComplexityMode::Both)),
            _ => None,
        };
        if let Some(c) = simple {
            return Ok(c);
        }
        let numbered = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|n| n.parse::<u8>().ok())
        };
        let c = if let Some(p) = numbered("recency_") {
            Condition::Recency(p)
        } else if let Some(k) = numbered("cumulative_") {
            Condition::Cumulative(k)
        } else {
            return Err(InvalidCondition(format!("unknown condition `{s}`")));
        };
        c.validate()?;
        Ok(c)
    }
}

impl From<Condition> for String {
    fn from(c: Condition) -> String {
        c.label()
    }
}

impl TryFrom<String> for Condition {
    type Error = InvalidCondition;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A condition together with its corpus-size parameters and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub name: Condition,
    pub targets_per_structure: usize,
    pub primes_per_target: usize,
    pub seed: u64,
    /// Cosine cutoff for "semantically similar" pairs. Filled in by the
    /// generator for the similarity conditions when left empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_threshold: Option<f64>,
}

impl ConditionSpec {
    /// Default sizes: one prime pair for `identical`, ten otherwise.
    pub fn new(name: Condition, seed: u64) -> Self {
        Self {
            name,
            targets_per_structure: DEFAULT_TARGETS_PER_STRUCTURE,
            primes_per_target: if name == Condition::Identical {
                1
            } else {
                DEFAULT_PRIMES_PER_TARGET
            },
            seed,
            similarity_threshold: None,
        }
    }

    pub fn with_size(mut self, targets: usize, primes: usize) -> Self {
        self.targets_per_structure = targets;
        self.primes_per_target = primes;
        self
    }

    pub fn validate(&self) -> Result<(), InvalidCondition> {
        self.name.validate()?;
        if self.targets_per_structure == 0 {
            return Err(InvalidCondition("targets_per_structure must be positive".into()));
        }
        if self.primes_per_target == 0 {
            return Err(InvalidCondition("primes_per_target must be positive".into()));
        }
        if self.name == Condition::Identical && self.primes_per_target != 1 {
            return Err(InvalidCondition(
                "identical admits exactly one prime pair per target".into(),
            ));
        }
        if let Some(t) = self.similarity_threshold {
            if !(-1.0..=1.0).contains(&t) {
                return Err(InvalidCondition(format!("similarity threshold {t} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// Number of prime/target pairs this spec asks for per structure
    /// (an upper bound for `sem_sim_all`).
    pub fn planned_pairs(&self) -> usize {
        self.targets_per_structure * self.primes_per_target
    }
}
