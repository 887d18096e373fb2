//! Template-level recognizer: maps a surface sentence back to the
//! construction and role bindings that produced it.
//!
//! Written against the lexicon only, so it can check realized text without
//! sharing code with the generator.

use thiserror::Error;

use crate::generator::{
    indefinite_article, Construction, Determiner, NounPhraseSpec, PrepPhrase, SentenceSpec, Tense,
};
use crate::lexicon::{Category, Lexicon, VerbKind};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("`{text}` does not match any template: {reason}")]
pub struct ParseError {
    pub text: String,
    pub reason: String,
}

struct Parser<'a> {
    lex: &'a Lexicon,
    tokens: Vec<String>,
}

type Step<T> = Result<(T, usize), String>;

impl Parser<'_> {
    fn tok(&self, i: usize) -> Option<&str> {
        self.tokens.get(i).map(String::as_str)
    }

    fn determiner(&self, i: usize) -> Step<Determiner> {
        let det = match self.tok(i) {
            Some("the") => Determiner::Definite,
            Some("a" | "an") => Determiner::Indefinite,
            other => return Err(format!("expected a determiner at {i}, found {other:?}")),
        };
        if det == Determiner::Indefinite {
            let next = self.tok(i + 1).ok_or("article at end of sentence")?;
            let want = indefinite_article(next);
            if self.tok(i) != Some(want) {
                return Err(format!("`{}` before `{next}` should be `{want}`", self.tok(i).unwrap_or("")));
            }
        }
        Ok((det, i + 1))
    }

    /// Det (Adj) Noun
    fn bare_np(&self, i: usize) -> Step<(Determiner, Option<String>, String)> {
        let (det, mut j) = self.determiner(i)?;
        let mut adjective = None;
        if let Some(w) = self.tok(j) {
            if self.lex.adjective(w).is_some() && self.lex.noun(w).is_none() {
                adjective = Some(w.to_string());
                j += 1;
            }
        }
        match self.tok(j) {
            Some(n) if self.lex.noun(n).is_some() => Ok(((det, adjective, n.to_string()), j + 1)),
            other => Err(format!("expected a noun at {j}, found {other:?}")),
        }
    }

    fn np(&self, i: usize) -> Step<NounPhraseSpec> {
        let ((determiner, adjective, noun), mut j) = self.bare_np(i)?;
        let mut pp = None;
        match self.tok(j) {
            Some("with") => {
                let ((d, a, n), k) = self.bare_np(j + 1)?;
                pp = Some(PrepPhrase::With {
                    determiner: d,
                    adjective: a,
                    noun: n,
                });
                j = k;
            }
            Some("from") => match self.tok(j + 1) {
                Some(c)
                    if self
                        .lex
                        .noun(c)
                        .is_some_and(|e| e.categories.contains(&Category::Country)) =>
                {
                    pp = Some(PrepPhrase::From {
                        country: c.to_string(),
                    });
                    j += 2;
                }
                other => return Err(format!("expected a country after `from`, found {other:?}")),
            },
            _ => {}
        }
        Ok((
            NounPhraseSpec {
                noun,
                determiner,
                adjective,
                pp,
            },
            j,
        ))
    }

    fn end(&self, j: usize) -> Result<(), String> {
        match self.tok(j) {
            None => Ok(()),
            Some(w) => Err(format!("unexpected trailing `{w}`")),
        }
    }

    fn spec(construction: Construction, verb: &str, tense: Tense) -> SentenceSpec {
        SentenceSpec {
            construction,
            verb: verb.to_string(),
            tense,
            agent: None,
            patient: None,
            recipient: None,
            pronoun_subject: None,
            auxiliary: None,
            implausible: false,
        }
    }

    fn padding(&self) -> Result<SentenceSpec, String> {
        let [p, aux, v] = &self.tokens[..] else {
            return Err("padding sentences have three words".into());
        };
        if !self.lex.auxiliaries().contains(aux) {
            return Err(format!("`{aux}` is not a padding auxiliary"));
        }
        match self.lex.verb(v) {
            Some(e) if e.kind == VerbKind::IntransitivePadding => {}
            _ => return Err(format!("`{v}` is not a padding verb")),
        }
        let mut s = Self::spec(Construction::IntrPad, v, Tense::Present);
        s.pronoun_subject = Some(p.clone());
        s.auxiliary = Some(aux.clone());
        Ok(s)
    }

    fn passive(&self, subject: NounPhraseSpec, j: usize) -> Result<SentenceSpec, String> {
        let tense = match self.tok(j) {
            Some("is") => Tense::Present,
            Some("was") => Tense::Past,
            _ => unreachable!("caller checked the auxiliary"),
        };
        let participle = self.tok(j + 1).ok_or("missing participle")?;
        let verb = self
            .lex
            .verbs()
            .find(|v| {
                v.kind == VerbKind::Transitive && v.past_participle.as_deref() == Some(participle)
            })
            .ok_or_else(|| format!("`{participle}` is not a transitive participle"))?;
        if self.tok(j + 2) != Some("by") {
            return Err("passive without `by`".into());
        }
        let (agent, k) = self.np(j + 3)?;
        self.end(k)?;
        let mut s = Self::spec(Construction::Pass, &verb.lemma, tense);
        s.patient = Some(subject);
        s.agent = Some(agent);
        Ok(s)
    }

    fn active(&self, subject: NounPhraseSpec, j: usize) -> Result<SentenceSpec, String> {
        let form = self.tok(j).ok_or("missing verb")?;
        let mut last = format!("`{form}` is not a finite verb form");
        for v in self.lex.verbs() {
            let attempt = match v.kind {
                VerbKind::Transitive => {
                    let tense = if v.past == form {
                        Tense::Past
                    } else if v.third_singular == form {
                        Tense::Present
                    } else {
                        continue;
                    };
                    self.np(j + 1).and_then(|(patient, k)| {
                        self.end(k)?;
                        let mut s = Self::spec(Construction::Act, &v.lemma, tense);
                        s.agent = Some(subject.clone());
                        s.patient = Some(patient);
                        Ok(s)
                    })
                }
                VerbKind::Ditransitive if v.past == form => {
                    self.np(j + 1).and_then(|(first, k)| {
                        let prep = v.po_preposition.map(|p| p.as_str());
                        if self.tok(k).is_some() && self.tok(k) == prep {
                            let (recipient, m) = self.np(k + 1)?;
                            self.end(m)?;
                            let mut s = Self::spec(Construction::Po, &v.lemma, Tense::Past);
                            s.agent = Some(subject.clone());
                            s.patient = Some(first);
                            s.recipient = Some(recipient);
                            Ok(s)
                        } else {
                            let (second, m) = self.np(k)?;
                            self.end(m)?;
                            let mut s = Self::spec(Construction::Do, &v.lemma, Tense::Past);
                            s.agent = Some(subject.clone());
                            s.recipient = Some(first);
                            s.patient = Some(second);
                            Ok(s)
                        }
                    })
                }
                _ => continue,
            };
            match attempt {
                Ok(s) => return Ok(s),
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    fn sentence(&self) -> Result<SentenceSpec, String> {
        let first = self.tok(0).ok_or("empty sentence")?;
        if self.lex.pronouns().iter().any(|p| p == first) {
            return self.padding();
        }
        let (subject, j) = self.np(0)?;
        match self.tok(j) {
            Some("is" | "was") => self.passive(subject, j),
            _ => self.active(subject, j),
        }
    }
}

/// Recover construction, verb, tense and noun phrases from a realized
/// sentence. A single trailing period is tolerated.
pub fn recognize(text: &str, lex: &Lexicon) -> Result<SentenceSpec, ParseError> {
    let body = text.trim().strip_suffix('.').unwrap_or(text.trim());
    let parser = Parser {
        lex,
        tokens: body.split_whitespace().map(str::to_lowercase).collect(),
    };
    parser.sentence().map_err(|reason| ParseError {
        text: text.to_string(),
        reason,
    })
}
