//! Annotated word lists, association norms and embeddings.
//!
//! The lexicon is loaded once from a directory of tab-separated files and is
//! immutable afterwards. Every generation constraint (selectional
//! restrictions, frequency cutoff, association and similarity bans) is
//! answered from here.

mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::LexiconPaths;

/// Default frequency-rank cutoff for sampled words.
pub const DEFAULT_FREQUENCY_CUTOFF: u32 = 5000;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("missing lexicon file {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{kind} verb `{lemma}` is missing required annotation `{annotation}`")]
    MissingAnnotation {
        lemma: String,
        kind: VerbKind,
        annotation: &'static str,
    },
    #[error("{class} `{lemma}`: {message}")]
    InvalidEntry {
        class: &'static str,
        lemma: String,
        message: String,
    },
    #[error("duplicate {class} entry `{lemma}`")]
    Duplicate { class: &'static str, lemma: String },
    #[error("{class} `{lemma}` has no embedding vector")]
    MissingEmbedding { class: &'static str, lemma: String },
    #[error("embedding for `{lemma}` is the zero vector")]
    ZeroEmbedding { lemma: String },
    #[error("no embedding for `{0}`")]
    UnknownEmbedding(String),
    #[error("percentile of an empty sample")]
    EmptySample,
    #[error("percentile must lie in (0, 100], got {0}")]
    InvalidPercentile(f64),
}

/// Semantic category tags used for selectional restrictions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Person,
    SocialGroup,
    SocialControl,
    Institution,
    PhysicalEntity,
    ObjectNonedible,
    ObjectEdible,
    ObjectDrinkable,
    Clothing,
    Device,
    Container,
    Country,
}

impl Category {
    pub const ALL: [Category; 12] = [
        Category::Person,
        Category::SocialGroup,
        Category::SocialControl,
        Category::Institution,
        Category::PhysicalEntity,
        Category::ObjectNonedible,
        Category::ObjectEdible,
        Category::ObjectDrinkable,
        Category::Clothing,
        Category::Device,
        Category::Container,
        Category::Country,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Person => "person",
            Category::SocialGroup => "social_group",
            Category::SocialControl => "social_control",
            Category::Institution => "institution",
            Category::PhysicalEntity => "physical_entity",
            Category::ObjectNonedible => "object_nonedible",
            Category::ObjectEdible => "object_edible",
            Category::ObjectDrinkable => "object_drinkable",
            Category::Clothing => "clothing",
            Category::Device => "device",
            Category::Container => "container",
            Category::Country => "country",
        }
    }

    /// Categories that can fill an agent, patient or recipient slot.
    pub fn is_role(self) -> bool {
        !matches!(
            self,
            Category::Clothing | Category::Device | Category::Container | Category::Country
        )
    }

    /// Categories admitted as the noun of a `with` prepositional phrase.
    pub fn is_with_pp(self) -> bool {
        matches!(self, Category::Clothing | Category::Device | Category::Container)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounEntry {
    pub lemma: String,
    pub categories: BTreeSet<Category>,
    pub countable: bool,
    pub frequency_rank: Option<u32>,
}

impl NounEntry {
    pub fn has_any(&self, cats: &BTreeSet<Category>) -> bool {
        self.categories.iter().any(|c| cats.contains(c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerbKind {
    Transitive,
    Ditransitive,
    IntransitivePadding,
}

impl VerbKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerbKind::Transitive => "transitive",
            VerbKind::Ditransitive => "ditransitive",
            VerbKind::IntransitivePadding => "intransitive_padding",
        }
    }
}

impl fmt::Display for VerbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Preposition introducing the recipient of a prepositional-object dative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preposition {
    To,
    For,
}

impl Preposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Preposition::To => "to",
            Preposition::For => "for",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbEntry {
    pub lemma: String,
    pub kind: VerbKind,
    pub past: String,
    pub past_participle: Option<String>,
    pub third_singular: String,
    pub po_preposition: Option<Preposition>,
    pub agent_categories: BTreeSet<Category>,
    pub patient_categories: BTreeSet<Category>,
    pub recipient_categories: BTreeSet<Category>,
    pub frequency_rank: Option<u32>,
}

impl VerbEntry {
    fn check(&self) -> Result<(), LexiconError> {
        let missing = |annotation| LexiconError::MissingAnnotation {
            lemma: self.lemma.clone(),
            kind: self.kind,
            annotation,
        };
        match self.kind {
            VerbKind::Transitive | VerbKind::Ditransitive => {
                if self.agent_categories.is_empty() {
                    return Err(missing("agent"));
                }
                if self.patient_categories.is_empty() {
                    return Err(missing("patient"));
                }
                if self.past_participle.as_deref().is_none_or(str::is_empty) {
                    return Err(missing("participle"));
                }
                if self.kind == VerbKind::Ditransitive {
                    if self.recipient_categories.is_empty() {
                        return Err(missing("recipient"));
                    }
                    if self.po_preposition.is_none() {
                        return Err(missing("prep"));
                    }
                } else if !self.recipient_categories.is_empty() || self.po_preposition.is_some() {
                    return Err(self.invalid("transitive verbs take no recipient or preposition"));
                }
            }
            VerbKind::IntransitivePadding => {
                if !self.agent_categories.is_empty()
                    || !self.patient_categories.is_empty()
                    || !self.recipient_categories.is_empty()
                    || self.po_preposition.is_some()
                {
                    return Err(self.invalid("padding verbs carry no role annotations"));
                }
            }
        }
        if self.past.is_empty() {
            return Err(missing("past"));
        }
        if self.third_singular.is_empty() {
            return Err(missing("third"));
        }
        Ok(())
    }

    fn invalid(&self, message: &str) -> LexiconError {
        LexiconError::InvalidEntry {
            class: "verb",
            lemma: self.lemma.clone(),
            message: message.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjectiveEntry {
    pub lemma: String,
    pub compatible_categories: BTreeSet<Category>,
    pub frequency_rank: Option<u32>,
}

/// Directed cue/target association strengths.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssociationTable {
    entries: BTreeMap<(String, String), f64>,
    neighbours: BTreeMap<String, BTreeSet<String>>,
}

impl AssociationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a directed entry. Zero strengths are kept but never count as
    /// an association.
    pub fn insert(&mut self, cue: &str, target: &str, strength: f64) {
        self.entries
            .insert((cue.to_string(), target.to_string()), strength);
        if strength > 0.0 {
            self.neighbours
                .entry(cue.to_string())
                .or_default()
                .insert(target.to_string());
            self.neighbours
                .entry(target.to_string())
                .or_default()
                .insert(cue.to_string());
        }
    }

    pub fn strength(&self, cue: &str, target: &str) -> Option<f64> {
        self.entries
            .get(&(cue.to_string(), target.to_string()))
            .copied()
    }

    /// True iff either direction is listed with a positive strength.
    pub fn is_associated(&self, a: &str, b: &str) -> bool {
        self.neighbours.get(a).is_some_and(|n| n.contains(b))
    }

    /// Words associated with `lemma` in either direction.
    pub fn neighbours(&self, lemma: &str) -> impl Iterator<Item = &str> {
        self.neighbours
            .get(lemma)
            .into_iter()
            .flat_map(|n| n.iter().map(String::as_str))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            vectors: BTreeMap::new(),
        }
    }

    /// Returns an error message if the vector has the wrong dimension.
    pub fn insert(&mut self, lemma: &str, vector: Vec<f64>) -> Result<(), String> {
        if vector.len() != self.dimension {
            return Err(format!(
                "expected {} components, found {}",
                self.dimension,
                vector.len()
            ));
        }
        if self.vectors.insert(lemma.to_string(), vector).is_some() {
            return Err(format!("duplicate vector for `{lemma}`"));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, lemma: &str) -> Option<&[f64]> {
        self.vectors.get(lemma).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    nouns: BTreeMap<String, NounEntry>,
    verbs: BTreeMap<String, VerbEntry>,
    adjectives: BTreeMap<String, AdjectiveEntry>,
    pronouns: Vec<String>,
    auxiliaries: Vec<String>,
    associations: AssociationTable,
    embeddings: EmbeddingTable,
    frequency_cutoff: u32,
}

/// Raw lexicon contents before invariant checking.
#[derive(Clone, Debug)]
pub struct LexiconParts {
    pub nouns: Vec<NounEntry>,
    pub verbs: Vec<VerbEntry>,
    pub adjectives: Vec<AdjectiveEntry>,
    pub pronouns: Vec<String>,
    pub auxiliaries: Vec<String>,
    pub associations: AssociationTable,
    pub embeddings: EmbeddingTable,
    pub frequency_cutoff: u32,
}

impl Lexicon {
    /// Load all lexicon files from `dir` using the standard file names.
    pub fn load_dir(dir: impl AsRef<Path>, frequency_cutoff: u32) -> Result<Self, LexiconError> {
        Self::load(&LexiconPaths::in_dir(dir), frequency_cutoff)
    }

    pub fn load(paths: &LexiconPaths, frequency_cutoff: u32) -> Result<Self, LexiconError> {
        parse::load(paths, frequency_cutoff)
    }

    /// Build a lexicon from already-parsed parts, checking every invariant.
    pub fn from_parts(parts: LexiconParts) -> Result<Self, LexiconError> {
        let mut nouns = BTreeMap::new();
        for n in parts.nouns {
            if n.categories.is_empty() {
                return Err(LexiconError::InvalidEntry {
                    class: "noun",
                    lemma: n.lemma,
                    message: "no categories".into(),
                });
            }
            check_embedding(&parts.embeddings, "noun", &n.lemma)?;
            if let Some(prev) = nouns.insert(n.lemma.clone(), n) {
                return Err(LexiconError::Duplicate {
                    class: "noun",
                    lemma: prev.lemma,
                });
            }
        }
        let mut verbs = BTreeMap::new();
        for v in parts.verbs {
            v.check()?;
            check_embedding(&parts.embeddings, "verb", &v.lemma)?;
            if let Some(prev) = verbs.insert(v.lemma.clone(), v) {
                return Err(LexiconError::Duplicate {
                    class: "verb",
                    lemma: prev.lemma,
                });
            }
        }
        let mut adjectives = BTreeMap::new();
        for a in parts.adjectives {
            if a.compatible_categories.is_empty() {
                return Err(LexiconError::InvalidEntry {
                    class: "adjective",
                    lemma: a.lemma,
                    message: "no compatible categories".into(),
                });
            }
            check_embedding(&parts.embeddings, "adjective", &a.lemma)?;
            if let Some(prev) = adjectives.insert(a.lemma.clone(), a) {
                return Err(LexiconError::Duplicate {
                    class: "adjective",
                    lemma: prev.lemma,
                });
            }
        }
        let mut pronouns = parts.pronouns;
        pronouns.sort();
        pronouns.dedup();
        let mut auxiliaries = parts.auxiliaries;
        auxiliaries.sort();
        auxiliaries.dedup();
        Ok(Self {
            nouns,
            verbs,
            adjectives,
            pronouns,
            auxiliaries,
            associations: parts.associations,
            embeddings: parts.embeddings,
            frequency_cutoff: parts.frequency_cutoff,
        })
    }

    pub fn frequency_cutoff(&self) -> u32 {
        self.frequency_cutoff
    }

    fn within_cutoff(&self, rank: Option<u32>) -> bool {
        rank.is_some_and(|r| r <= self.frequency_cutoff)
    }

    pub fn noun(&self, lemma: &str) -> Option<&NounEntry> {
        self.nouns.get(lemma)
    }

    pub fn verb(&self, lemma: &str) -> Option<&VerbEntry> {
        self.verbs.get(lemma)
    }

    pub fn adjective(&self, lemma: &str) -> Option<&AdjectiveEntry> {
        self.adjectives.get(lemma)
    }

    pub fn nouns(&self) -> impl Iterator<Item = &NounEntry> {
        self.nouns.values()
    }

    pub fn verbs(&self) -> impl Iterator<Item = &VerbEntry> {
        self.verbs.values()
    }

    pub fn adjectives(&self) -> impl Iterator<Item = &AdjectiveEntry> {
        self.adjectives.values()
    }

    /// Frequency rank of any noun, verb or adjective lemma.
    pub fn frequency_rank(&self, lemma: &str) -> Option<u32> {
        self.nouns
            .get(lemma)
            .map(|n| n.frequency_rank)
            .or_else(|| self.verbs.get(lemma).map(|v| v.frequency_rank))
            .or_else(|| self.adjectives.get(lemma).map(|a| a.frequency_rank))
            .flatten()
    }

    /// True if the lemma may be drawn by the sampler: known, ranked within
    /// the cutoff and, for nouns, countable.
    pub fn is_sampleable(&self, lemma: &str) -> bool {
        if let Some(n) = self.nouns.get(lemma) {
            return n.countable && self.within_cutoff(n.frequency_rank);
        }
        self.within_cutoff(self.frequency_rank(lemma))
    }

    /// Sampleable nouns that can fill a verb role.
    pub fn role_nouns(&self) -> impl Iterator<Item = &NounEntry> {
        self.nouns.values().filter(|n| {
            n.categories.iter().any(|c| c.is_role()) && self.is_sampleable(&n.lemma)
        })
    }

    /// Sampleable nouns usable in a `with` prepositional phrase.
    pub fn pp_with_nouns(&self) -> impl Iterator<Item = &NounEntry> {
        self.nouns.values().filter(|n| {
            n.categories.iter().all(|c| c.is_with_pp()) && self.is_sampleable(&n.lemma)
        })
    }

    /// Sampleable country names for `from` prepositional phrases.
    pub fn countries(&self) -> impl Iterator<Item = &NounEntry> {
        self.nouns.values().filter(|n| {
            n.categories.contains(&Category::Country) && self.is_sampleable(&n.lemma)
        })
    }

    pub fn sampleable_verbs(&self, kind: VerbKind) -> impl Iterator<Item = &VerbEntry> {
        self.verbs
            .values()
            .filter(move |v| v.kind == kind && self.within_cutoff(v.frequency_rank))
    }

    pub fn sampleable_adjectives(&self) -> impl Iterator<Item = &AdjectiveEntry> {
        self.adjectives
            .values()
            .filter(|a| self.within_cutoff(a.frequency_rank))
    }

    pub fn pronouns(&self) -> &[String] {
        &self.pronouns
    }

    pub fn auxiliaries(&self) -> &[String] {
        &self.auxiliaries
    }

    pub fn associations(&self) -> &AssociationTable {
        &self.associations
    }

    pub fn embeddings(&self) -> &EmbeddingTable {
        &self.embeddings
    }

    pub fn is_associated(&self, a: &str, b: &str) -> bool {
        self.associations.is_associated(a, b)
    }

    pub fn cosine_similarity(&self, a: &str, b: &str) -> Result<f64, LexiconError> {
        let u = self
            .embeddings
            .get(a)
            .ok_or_else(|| LexiconError::UnknownEmbedding(a.to_string()))?;
        let v = self
            .embeddings
            .get(b)
            .ok_or_else(|| LexiconError::UnknownEmbedding(b.to_string()))?;
        Ok(cosine(u, v))
    }
}

fn check_embedding(
    table: &EmbeddingTable,
    class: &'static str,
    lemma: &str,
) -> Result<(), LexiconError> {
    match table.get(lemma) {
        None => Err(LexiconError::MissingEmbedding {
            class,
            lemma: lemma.to_string(),
        }),
        Some(v) if v.iter().all(|x| *x == 0.0) => Err(LexiconError::ZeroEmbedding {
            lemma: lemma.to_string(),
        }),
        Some(_) => Ok(()),
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

/// Nearest-rank percentile: the value at 1-based rank ⌈p/100 · n⌉ of the
/// sorted sample.
pub fn similarity_threshold(samples: &[f64], percentile: f64) -> Result<f64, LexiconError> {
    if samples.is_empty() {
        return Err(LexiconError::EmptySample);
    }
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(LexiconError::InvalidPercentile(percentile));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats(list: &[Category]) -> BTreeSet<Category> {
        list.iter().copied().collect()
    }

    fn tiny(embeddings: &[(&str, Vec<f64>)]) -> LexiconParts {
        let mut table = EmbeddingTable::new(2);
        for (w, v) in embeddings {
            table.insert(w, v.clone()).unwrap();
        }
        LexiconParts {
            nouns: vec![],
            verbs: vec![],
            adjectives: vec![],
            pronouns: vec![],
            auxiliaries: vec![],
            associations: AssociationTable::new(),
            embeddings: table,
            frequency_cutoff: DEFAULT_FREQUENCY_CUTOFF,
        }
    }

    fn noun(lemma: &str) -> NounEntry {
        NounEntry {
            lemma: lemma.into(),
            categories: cats(&[Category::Person]),
            countable: true,
            frequency_rank: Some(1),
        }
    }

    #[test]
    fn cosine_cases() {
        let lex = Lexicon::from_parts(tiny(&[
            ("x", vec![1.0, 0.0]),
            ("y", vec![0.0, 1.0]),
            ("d", vec![1.0, 1.0]),
        ]))
        .unwrap();
        assert_eq!(lex.cosine_similarity("x", "x").unwrap(), 1.0);
        assert_eq!(lex.cosine_similarity("x", "y").unwrap(), 0.0);
        // (1,1)·(1,0) / (√2 · 1) = 1/√2
        let c = lex.cosine_similarity("d", "x").unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12, "{c}");
        assert!(matches!(
            lex.cosine_similarity("x", "nope"),
            Err(LexiconError::UnknownEmbedding(w)) if w == "nope"
        ));
    }

    #[test]
    fn nearest_rank_percentile() {
        let samples: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(similarity_threshold(&samples, 90.0).unwrap(), 0.9);
        assert_eq!(similarity_threshold(&[0.4], 37.0).unwrap(), 0.4);
        assert_eq!(similarity_threshold(&[0.4], 100.0).unwrap(), 0.4);
        assert!(matches!(
            similarity_threshold(&[], 90.0),
            Err(LexiconError::EmptySample)
        ));
        assert!(similarity_threshold(&[1.0], 0.0).is_err());
    }

    #[test]
    fn association_is_symmetric_and_ignores_zero() {
        let mut t = AssociationTable::new();
        t.insert("doctor", "nurse", 0.35);
        t.insert("tea", "water", 0.0);
        assert!(t.is_associated("doctor", "nurse"));
        assert!(t.is_associated("nurse", "doctor"));
        assert_eq!(t.strength("nurse", "doctor"), None);
        assert!(!t.is_associated("tea", "water"));
        assert!(!t.is_associated("doctor", "doctor"));
    }

    #[test]
    fn zero_and_missing_embeddings_rejected() {
        let mut parts = tiny(&[("a", vec![0.0, 0.0])]);
        parts.nouns.push(noun("a"));
        assert!(matches!(
            Lexicon::from_parts(parts),
            Err(LexiconError::ZeroEmbedding { .. })
        ));
        let mut parts = tiny(&[]);
        parts.nouns.push(noun("b"));
        assert!(matches!(
            Lexicon::from_parts(parts),
            Err(LexiconError::MissingEmbedding { lemma, .. }) if lemma == "b"
        ));
    }

    #[test]
    fn ditransitive_without_preposition_names_lemma() {
        let mut parts = tiny(&[("give", vec![1.0, 0.0])]);
        parts.verbs.push(VerbEntry {
            lemma: "give".into(),
            kind: VerbKind::Ditransitive,
            past: "gave".into(),
            past_participle: Some("given".into()),
            third_singular: "gives".into(),
            po_preposition: None,
            agent_categories: cats(&[Category::Person]),
            patient_categories: cats(&[Category::ObjectNonedible]),
            recipient_categories: cats(&[Category::Person]),
            frequency_rank: Some(1),
        });
        let err = Lexicon::from_parts(parts).unwrap_err();
        assert!(err.to_string().contains("`give`"), "{err}");
        assert!(err.to_string().contains("prep"), "{err}");
    }

    #[test]
    fn cutoff_and_countability_gate_sampling() {
        let mut parts = tiny(&[("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![1.0, 1.0])]);
        parts.frequency_cutoff = 10;
        parts.nouns.push(noun("a"));
        parts.nouns.push(NounEntry {
            frequency_rank: Some(11),
            ..noun("b")
        });
        parts.nouns.push(NounEntry {
            countable: false,
            ..noun("c")
        });
        let lex = Lexicon::from_parts(parts).unwrap();
        let pool: Vec<_> = lex.role_nouns().map(|n| n.lemma.as_str()).collect();
        assert_eq!(pool, ["a"]);
        assert!(lex.noun("b").is_some());
    }
}
