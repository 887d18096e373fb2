use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use super::types::*;
use crate::lexicon::{Category, Lexicon, VerbKind};

#[derive(Debug, Error, PartialEq)]
pub enum RealizeError {
    #[error("unknown {class} `{lemma}`")]
    Unknown { class: &'static str, lemma: String },
    #[error("verb `{verb}` is {kind}, which cannot head a {construction} sentence")]
    WrongVerbKind {
        verb: String,
        kind: VerbKind,
        construction: Construction,
    },
    #[error("verb `{verb}` has no {form} form")]
    MissingForm { verb: String, form: &'static str },
    #[error("{construction} sentence is missing its {role}")]
    MissingRole {
        construction: Construction,
        role: &'static str,
    },
    #[error("{construction} sentence has an unexpected {role}")]
    UnexpectedRole {
        construction: Construction,
        role: &'static str,
    },
    #[error("{role} `{noun}` does not satisfy the restrictions of `{verb}`")]
    CategoryMismatch {
        role: &'static str,
        noun: String,
        verb: String,
    },
    #[error("dative sentences must be in the past tense")]
    DativeTense,
    #[error("more than one complex noun phrase in one sentence")]
    TooManyComplex,
    #[error("{0}")]
    InvalidPhrase(String),
    #[error("padding sentences need a pronoun subject and an auxiliary")]
    IncompletePadding,
    #[error("padding sentences cannot be alternated")]
    NotAlternating,
    #[error("no padding verbs in the lexicon")]
    NoPaddingVerbs,
}

const AN_WORDS: &[&str] = &[
    "heir", "heiress", "honest", "honestly", "honor", "honorable", "honour", "hour", "hourly",
];
const A_WORDS: &[&str] = &[
    "once", "one", "ufo", "unicorn", "uniform", "union", "unique", "unit", "unite", "united",
    "universal", "universe", "university", "utensil", "utility",
];
const A_PREFIXES: &[&str] = &["eu", "ewe", "use", "usu"];

/// "a" or "an" for the word that follows the article.
pub fn indefinite_article(word: &str) -> &'static str {
    let w = word.to_lowercase();
    if AN_WORDS.contains(&w.as_str()) {
        return "an";
    }
    if A_WORDS.contains(&w.as_str()) || A_PREFIXES.iter().any(|p| w.starts_with(p)) {
        return "a";
    }
    match w.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Words {
    words: Vec<String>,
    function: BTreeSet<String>,
    content: BTreeSet<String>,
}

impl Words {
    fn function(&mut self, w: &str) {
        self.words.push(w.to_string());
        self.function.insert(w.to_string());
    }

    fn content(&mut self, surface: &str, lemma: &str) {
        self.words.push(surface.to_string());
        self.content.insert(lemma.to_string());
    }

    fn determiner(&mut self, det: Determiner, next: &str) {
        match det {
            Determiner::Definite => self.function("the"),
            Determiner::Indefinite => self.function(indefinite_article(next)),
        }
    }

    fn noun_phrase(&mut self, np: &NounPhraseSpec) {
        self.determiner(np.determiner, np.adjective.as_deref().unwrap_or(&np.noun));
        if let Some(a) = &np.adjective {
            self.content(a, a);
        }
        self.content(&np.noun, &np.noun);
        match &np.pp {
            Some(PrepPhrase::With {
                determiner,
                adjective,
                noun,
            }) => {
                self.function("with");
                self.determiner(*determiner, adjective.as_deref().unwrap_or(noun));
                if let Some(a) = adjective {
                    self.content(a, a);
                }
                self.content(noun, noun);
            }
            Some(PrepPhrase::From { country }) => {
                self.function("from");
                self.content(&capitalize(country), country);
            }
            None => {}
        }
    }
}

fn check_phrase(
    lex: &Lexicon,
    np: &NounPhraseSpec,
    role: Role,
    verb: &crate::lexicon::VerbEntry,
    implausible: bool,
) -> Result<(), RealizeError> {
    let noun = lex.noun(&np.noun).ok_or_else(|| RealizeError::Unknown {
        class: "noun",
        lemma: np.noun.clone(),
    })?;
    let allowed = match role {
        Role::Agent => &verb.agent_categories,
        Role::Patient => &verb.patient_categories,
        Role::Recipient => &verb.recipient_categories,
    };
    if !implausible && !noun.has_any(allowed) {
        return Err(RealizeError::CategoryMismatch {
            role: role.as_str(),
            noun: np.noun.clone(),
            verb: verb.lemma.clone(),
        });
    }
    if let Some(a) = &np.adjective {
        let adj = lex.adjective(a).ok_or_else(|| RealizeError::Unknown {
            class: "adjective",
            lemma: a.clone(),
        })?;
        if !noun.has_any(&adj.compatible_categories) {
            return Err(RealizeError::InvalidPhrase(format!(
                "adjective `{a}` is not compatible with `{}`",
                np.noun
            )));
        }
    }
    match &np.pp {
        Some(PrepPhrase::With {
            adjective, noun: n, ..
        }) => {
            let entry = lex.noun(n).ok_or_else(|| RealizeError::Unknown {
                class: "noun",
                lemma: n.clone(),
            })?;
            if !entry.categories.iter().all(|c| c.is_with_pp()) {
                return Err(RealizeError::InvalidPhrase(format!(
                    "`{n}` cannot head a with-phrase"
                )));
            }
            if let Some(a) = adjective {
                let adj = lex.adjective(a).ok_or_else(|| RealizeError::Unknown {
                    class: "adjective",
                    lemma: a.clone(),
                })?;
                if !entry.has_any(&adj.compatible_categories) {
                    return Err(RealizeError::InvalidPhrase(format!(
                        "adjective `{a}` is not compatible with `{n}`"
                    )));
                }
            }
        }
        Some(PrepPhrase::From { country }) => {
            let entry = lex.noun(country).ok_or_else(|| RealizeError::Unknown {
                class: "noun",
                lemma: country.clone(),
            })?;
            if !entry.categories.contains(&Category::Country) {
                return Err(RealizeError::InvalidPhrase(format!("`{country}` is not a country")));
            }
        }
        None => {}
    }
    Ok(())
}

/// Render a spec through its construction's template.
pub fn realize(spec: &SentenceSpec, lex: &Lexicon) -> Result<Sentence, RealizeError> {
    let verb = lex.verb(&spec.verb).ok_or_else(|| RealizeError::Unknown {
        class: "verb",
        lemma: spec.verb.clone(),
    })?;
    let expected_kind = match spec.construction {
        Construction::Act | Construction::Pass => VerbKind::Transitive,
        Construction::Do | Construction::Po => VerbKind::Ditransitive,
        Construction::IntrPad => VerbKind::IntransitivePadding,
    };
    if verb.kind != expected_kind {
        return Err(RealizeError::WrongVerbKind {
            verb: spec.verb.clone(),
            kind: verb.kind,
            construction: spec.construction,
        });
    }
    let mut w = Words {
        words: Vec::new(),
        function: BTreeSet::new(),
        content: BTreeSet::new(),
    };

    if spec.construction == Construction::IntrPad {
        let (Some(pronoun), Some(aux)) = (&spec.pronoun_subject, &spec.auxiliary) else {
            return Err(RealizeError::IncompletePadding);
        };
        if spec.agent.is_some() || spec.patient.is_some() || spec.recipient.is_some() {
            return Err(RealizeError::UnexpectedRole {
                construction: spec.construction,
                role: "noun phrase",
            });
        }
        w.function(pronoun);
        w.function(aux);
        w.content(&verb.lemma, &verb.lemma);
        return Ok(finish(spec, w));
    }
    if spec.pronoun_subject.is_some() || spec.auxiliary.is_some() {
        return Err(RealizeError::UnexpectedRole {
            construction: spec.construction,
            role: "pronoun or auxiliary",
        });
    }

    let dative = expected_kind == VerbKind::Ditransitive;
    if dative && spec.tense != Tense::Past {
        return Err(RealizeError::DativeTense);
    }
    let need = |role: Role| {
        spec.role(role).ok_or(RealizeError::MissingRole {
            construction: spec.construction,
            role: role.as_str(),
        })
    };
    let agent = need(Role::Agent)?;
    let patient = need(Role::Patient)?;
    let recipient = if dative {
        Some(need(Role::Recipient)?)
    } else {
        if spec.recipient.is_some() {
            return Err(RealizeError::UnexpectedRole {
                construction: spec.construction,
                role: "recipient",
            });
        }
        None
    };
    for (role, np) in spec.roles() {
        check_phrase(lex, np, role, verb, spec.implausible)?;
    }
    if spec.complex_roles().len() > 1 {
        return Err(RealizeError::TooManyComplex);
    }

    let participle = || {
        verb.past_participle
            .as_deref()
            .ok_or(RealizeError::MissingForm {
                verb: verb.lemma.clone(),
                form: "participle",
            })
    };
    match spec.construction {
        Construction::Act => {
            w.noun_phrase(agent);
            let form = match spec.tense {
                Tense::Past => &verb.past,
                Tense::Present => &verb.third_singular,
            };
            w.content(form, &verb.lemma);
            w.noun_phrase(patient);
        }
        Construction::Pass => {
            w.noun_phrase(patient);
            w.function(match spec.tense {
                Tense::Past => "was",
                Tense::Present => "is",
            });
            w.content(participle()?, &verb.lemma);
            w.function("by");
            w.noun_phrase(agent);
        }
        Construction::Do => {
            w.noun_phrase(agent);
            w.content(&verb.past, &verb.lemma);
            w.noun_phrase(recipient.expect("dative"));
            w.noun_phrase(patient);
        }
        Construction::Po => {
            let prep = verb.po_preposition.ok_or(RealizeError::MissingForm {
                verb: verb.lemma.clone(),
                form: "preposition",
            })?;
            w.noun_phrase(agent);
            w.content(&verb.past, &verb.lemma);
            w.noun_phrase(patient);
            w.function(prep.as_str());
            w.noun_phrase(recipient.expect("dative"));
        }
        Construction::IntrPad => unreachable!("handled above"),
    }
    Ok(finish(spec, w))
}

fn finish(spec: &SentenceSpec, w: Words) -> Sentence {
    let text = capitalize(&w.words.join(" "));
    Sentence {
        spec: spec.clone(),
        text,
        content_lemmas: w.content,
        function_words: w.function,
    }
}

/// Same content in the other construction of the alternation. Tense,
/// determiners and noun-phrase modifiers are carried over unchanged.
pub fn alternate(spec: &SentenceSpec) -> Result<SentenceSpec, RealizeError> {
    let construction = spec
        .construction
        .alternated()
        .ok_or(RealizeError::NotAlternating)?;
    Ok(SentenceSpec {
        construction,
        ..spec.clone()
    })
}

/// A "Pronoun Aux Verb" filler sentence drawn from the closed classes.
pub fn padding_sentence<R: Rng + ?Sized>(
    lex: &Lexicon,
    rng: &mut R,
) -> Result<Sentence, RealizeError> {
    let verbs: Vec<_> = lex.sampleable_verbs(VerbKind::IntransitivePadding).collect();
    let verb = verbs.choose(rng).ok_or(RealizeError::NoPaddingVerbs)?;
    let pronoun = lex.pronouns().choose(rng).ok_or(RealizeError::IncompletePadding)?;
    let aux = lex.auxiliaries().choose(rng).ok_or(RealizeError::IncompletePadding)?;
    realize(&padding_spec(&verb.lemma, pronoun, aux), lex)
}

pub(crate) fn padding_spec(verb: &str, pronoun: &str, aux: &str) -> SentenceSpec {
    SentenceSpec {
        construction: Construction::IntrPad,
        verb: verb.to_string(),
        tense: Tense::Present,
        agent: None,
        patient: None,
        recipient: None,
        pronoun_subject: Some(pronoun.to_string()),
        auxiliary: Some(aux.to_string()),
        implausible: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn articles() {
        assert_eq!(indefinite_article("engine"), "an");
        assert_eq!(indefinite_article("pilot"), "a");
        assert_eq!(indefinite_article("hour"), "an");
        assert_eq!(indefinite_article("honest"), "an");
        assert_eq!(indefinite_article("university"), "a");
        assert_eq!(indefinite_article("useful"), "a");
        assert_eq!(indefinite_article("uncle"), "an");
        assert_eq!(indefinite_article("Engine"), "an");
    }

    #[test]
    fn capitalization() {
        assert_eq!(capitalize("the boy"), "The boy");
        assert_eq!(capitalize(""), "");
    }
}
