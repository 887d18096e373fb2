use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::condition::ConditionSpec;

/// Schema tag written into every corpus line.
pub const ITEM_SCHEMA: &str = "prime-target/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Construction {
    #[serde(rename = "ACT")]
    Act,
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "DO")]
    Do,
    #[serde(rename = "PO")]
    Po,
    #[serde(rename = "INTR_PAD")]
    IntrPad,
}

impl Construction {
    /// The four constructions that can be targets.
    pub const TARGETS: [Construction; 4] = [
        Construction::Act,
        Construction::Pass,
        Construction::Do,
        Construction::Po,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Construction::Act => "ACT",
            Construction::Pass => "PASS",
            Construction::Do => "DO",
            Construction::Po => "PO",
            Construction::IntrPad => "INTR_PAD",
        }
    }

    pub fn alternation(self) -> Option<Alternation> {
        match self {
            Construction::Act | Construction::Pass => Some(Alternation::Transitive),
            Construction::Do | Construction::Po => Some(Alternation::Dative),
            Construction::IntrPad => None,
        }
    }

    /// The other member of the alternation.
    pub fn alternated(self) -> Option<Construction> {
        match self {
            Construction::Act => Some(Construction::Pass),
            Construction::Pass => Some(Construction::Act),
            Construction::Do => Some(Construction::Po),
            Construction::Po => Some(Construction::Do),
            Construction::IntrPad => None,
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ACT" => Ok(Construction::Act),
            "PASS" => Ok(Construction::Pass),
            "DO" => Ok(Construction::Do),
            "PO" => Ok(Construction::Po),
            "INTR_PAD" => Ok(Construction::IntrPad),
            _ => Err(format!("unknown construction `{s}` (expected ACT, PASS, DO or PO)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternation {
    Dative,
    Transitive,
}

impl Alternation {
    pub fn constructions(self) -> [Construction; 2] {
        match self {
            Alternation::Transitive => [Construction::Act, Construction::Pass],
            Alternation::Dative => [Construction::Do, Construction::Po],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Determiner {
    #[serde(rename = "a_an")]
    Indefinite,
    #[serde(rename = "the")]
    Definite,
}

impl Determiner {
    pub fn other(self) -> Self {
        match self {
            Determiner::Indefinite => Determiner::Definite,
            Determiner::Definite => Determiner::Indefinite,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tense {
    Past,
    Present,
}

impl Tense {
    pub fn other(self) -> Self {
        match self {
            Tense::Past => Tense::Present,
            Tense::Present => Tense::Past,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Agent,
    Patient,
    Recipient,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Agent, Role::Patient, Role::Recipient];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Agent => "agent",
            Role::Patient => "patient",
            Role::Recipient => "recipient",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrepPhrase {
    With {
        determiner: Determiner,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        adjective: Option<String>,
        noun: String,
    },
    From {
        country: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NounPhraseSpec {
    pub noun: String,
    pub determiner: Determiner,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pp: Option<PrepPhrase>,
}

/// Which optional modifier slots of a noun phrase are filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NpShape {
    Simple,
    Adjective,
    Pp,
    Both,
}

impl NpShape {
    pub const COMPLEX: [NpShape; 3] = [NpShape::Adjective, NpShape::Pp, NpShape::Both];
}

impl NounPhraseSpec {
    pub fn simple(noun: &str, determiner: Determiner) -> Self {
        Self {
            noun: noun.to_string(),
            determiner,
            adjective: None,
            pp: None,
        }
    }

    pub fn shape(&self) -> NpShape {
        match (self.adjective.is_some(), self.pp.is_some()) {
            (false, false) => NpShape::Simple,
            (true, false) => NpShape::Adjective,
            (false, true) => NpShape::Pp,
            (true, true) => NpShape::Both,
        }
    }

    /// Content lemmas of the phrase: head, adjective and PP words.
    pub fn lemmas(&self) -> Vec<&str> {
        let mut out = vec![self.noun.as_str()];
        out.extend(self.adjective.as_deref());
        match &self.pp {
            Some(PrepPhrase::With { adjective, noun, .. }) => {
                out.extend(adjective.as_deref());
                out.push(noun);
            }
            Some(PrepPhrase::From { country }) => out.push(country),
            None => {}
        }
        out
    }
}

/// Abstract role binding of one sentence. Padding sentences use
/// `pronoun_subject` and `auxiliary` and leave the roles empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceSpec {
    pub construction: Construction,
    pub verb: String,
    pub tense: Tense,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<NounPhraseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient: Option<NounPhraseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient: Option<NounPhraseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pronoun_subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<String>,
    /// Set when role nouns deliberately violate the verb's restrictions.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub implausible: bool,
}

impl SentenceSpec {
    pub fn role(&self, role: Role) -> Option<&NounPhraseSpec> {
        match role {
            Role::Agent => self.agent.as_ref(),
            Role::Patient => self.patient.as_ref(),
            Role::Recipient => self.recipient.as_ref(),
        }
    }

    pub fn role_mut(&mut self, role: Role) -> &mut Option<NounPhraseSpec> {
        match role {
            Role::Agent => &mut self.agent,
            Role::Patient => &mut self.patient,
            Role::Recipient => &mut self.recipient,
        }
    }

    /// Filled roles in agent, patient, recipient order.
    pub fn roles(&self) -> impl Iterator<Item = (Role, &NounPhraseSpec)> {
        Role::ALL
            .into_iter()
            .filter_map(|r| self.role(r).map(|np| (r, np)))
    }

    pub fn complex_roles(&self) -> Vec<Role> {
        self.roles()
            .filter(|(_, np)| np.shape() != NpShape::Simple)
            .map(|(r, _)| r)
            .collect()
    }

    /// Determiner shared by the sentence's noun phrases, if any.
    pub fn determiner(&self) -> Option<Determiner> {
        self.roles().next().map(|(_, np)| np.determiner)
    }
}

/// A realized sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    pub spec: SentenceSpec,
    pub text: String,
    pub content_lemmas: BTreeSet<String>,
    /// Determiners, prepositions, auxiliaries and pronouns in surface form.
    pub function_words: BTreeSet<String>,
}

impl Sentence {
    pub fn construction(&self) -> Construction {
        self.spec.construction
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimePair {
    pub congruent: Vec<Sentence>,
    pub incongruent: Vec<Sentence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimeTargetItem {
    pub schema: String,
    pub id: String,
    pub alternation: Alternation,
    pub structure: Construction,
    pub condition: ConditionSpec,
    pub target: Sentence,
    pub prime_pairs: Vec<PrimePair>,
}

/// Join sentences into one context string: ". " between sentences and a
/// final period.
pub fn join_sentences<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> String {
    let mut out = String::new();
    for s in sentences {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&s.text);
        out.push('.');
    }
    out
}
