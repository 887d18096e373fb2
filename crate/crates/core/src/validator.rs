//! Independent checker for generated items.
//!
//! Works from the surface text (via [`crate::grammar`]) and lexicon
//! queries only; none of the generator's sampling code is used, so an item
//! that passes here satisfies the constraints regardless of how it was
//! produced.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::generator::{
    Alternation, ComplexityMode, Condition, ConditionSpec, Construction, Determiner, NpShape,
    PrepPhrase, PrimeTargetItem, Role, Sentence, SentenceSpec, Tense, ITEM_SCHEMA,
};
use crate::grammar::recognize;
use crate::lexicon::{Category, Lexicon, VerbKind};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub item_id: String,
    /// Stable constraint name, e.g. `content_disjoint` or `association`.
    pub constraint: String,
    pub words: Vec<String>,
    /// Prime-pair index, or `None` for item-level problems.
    pub pair_index: Option<usize>,
    pub detail: String,
}

const CLOSED_FUNCTION_WORDS: &[&str] = &[
    "the", "a", "an", "is", "was", "by", "to", "for", "with", "from",
];

struct Report<'a> {
    item_id: &'a str,
    found: BTreeMap<(Option<usize>, &'static str), Violation>,
}

impl Report<'_> {
    fn add(&mut self, pair: Option<usize>, constraint: &'static str, words: &[&str], detail: impl Into<String>) {
        let v = self
            .found
            .entry((pair, constraint))
            .or_insert_with(|| Violation {
                item_id: self.item_id.to_string(),
                constraint: constraint.to_string(),
                words: Vec::new(),
                pair_index: pair,
                detail: detail.into(),
            });
        for w in words {
            if !v.words.iter().any(|x| x == w) {
                v.words.push(w.to_string());
            }
        }
    }
}

fn spec_lemmas(spec: &SentenceSpec) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.insert(spec.verb.clone());
    for (_, np) in spec.roles() {
        out.insert(np.noun.clone());
        if let Some(a) = &np.adjective {
            out.insert(a.clone());
        }
        match &np.pp {
            Some(PrepPhrase::With { adjective, noun, .. }) => {
                out.insert(noun.clone());
                if let Some(a) = adjective {
                    out.insert(a.clone());
                }
            }
            Some(PrepPhrase::From { country }) => {
                out.insert(country.clone());
            }
            None => {}
        }
    }
    out
}

fn surface_function_words(text: &str, lex: &Lexicon) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|w| w.trim_end_matches('.').to_lowercase())
        .filter(|w| {
            CLOSED_FUNCTION_WORDS.contains(&w.as_str())
                || lex.pronouns().contains(w)
                || lex.auxiliaries().contains(w)
        })
        .collect()
}

/// Function words with the two indefinite articles merged.
fn normalized_function_words(s: &Sentence, lex: &Lexicon) -> BTreeSet<String> {
    surface_function_words(&s.text, lex)
        .into_iter()
        .map(|w| if w == "an" { "a".to_string() } else { w })
        .collect()
}

fn role_set(lex: &Lexicon, verb: &str, role: Role) -> BTreeSet<Category> {
    lex.verb(verb)
        .map(|v| match role {
            Role::Agent => v.agent_categories.clone(),
            Role::Patient => v.patient_categories.clone(),
            Role::Recipient => v.recipient_categories.clone(),
        })
        .unwrap_or_default()
}

fn fits(lex: &Lexicon, noun: &str, cats: &BTreeSet<Category>) -> bool {
    lex.noun(noun)
        .is_some_and(|n| n.categories.iter().any(|c| cats.contains(c)))
}

fn verb_prep(lex: &Lexicon, verb: &str) -> Option<&'static str> {
    lex.verb(verb).and_then(|v| v.po_preposition).map(|p| p.as_str())
}

fn np_determiners(spec: &SentenceSpec) -> BTreeSet<Determiner> {
    let mut out = BTreeSet::new();
    for (_, np) in spec.roles() {
        out.insert(np.determiner);
        if let Some(PrepPhrase::With { determiner, .. }) = &np.pp {
            out.insert(*determiner);
        }
    }
    out
}

fn shape(np: &crate::generator::NounPhraseSpec) -> NpShape {
    match (np.adjective.is_some(), np.pp.is_some()) {
        (false, false) => NpShape::Simple,
        (true, false) => NpShape::Adjective,
        (false, true) => NpShape::Pp,
        (true, true) => NpShape::Both,
    }
}

fn complex_shapes(spec: &SentenceSpec) -> Vec<NpShape> {
    spec.roles()
        .map(|(_, np)| shape(np))
        .filter(|s| *s != NpShape::Simple)
        .collect()
}

fn check_sentence(lex: &Lexicon, s: &Sentence, pair: Option<usize>, r: &mut Report) {
    let text = &s.text;
    if !text.chars().next().is_some_and(char::is_uppercase)
        || text.ends_with(['.', '!', '?'])
    {
        r.add(pair, "surface_form", &[text], "sentence must start upper-case and carry no final punctuation");
    }
    match recognize(text, lex) {
        Ok(parsed) => {
            let mut expected = s.spec.clone();
            expected.implausible = false;
            if parsed != expected {
                r.add(pair, "template", &[text], "surface text does not match its spec");
            }
        }
        Err(e) => r.add(pair, "template", &[text], e.reason),
    }
    if s.content_lemmas != spec_lemmas(&s.spec) {
        r.add(pair, "lemma_sets", &[text], "recorded content lemmas differ from the spec");
    }
    if s.function_words != surface_function_words(text, lex) {
        r.add(pair, "lemma_sets", &[text], "recorded function words differ from the text");
    }
    for w in &s.content_lemmas {
        if lex.noun(w).is_some_and(|n| !n.countable) {
            r.add(pair, "countable", &[w], "uncountable noun in a templated phrase");
        }
        let ranked = lex.frequency_rank(w).is_some_and(|k| k <= lex.frequency_cutoff());
        if !ranked {
            r.add(pair, "frequency_cutoff", &[w], "word outside the frequency cutoff");
        }
    }
    let spec = &s.spec;
    if spec.construction == Construction::IntrPad {
        return;
    }
    let kind = lex.verb(&spec.verb).map(|v| v.kind);
    let dative = matches!(spec.construction, Construction::Do | Construction::Po);
    if dative && spec.tense != Tense::Past {
        r.add(pair, "dative_tense", &[text], "dative sentences are past tense");
    }
    if kind != Some(if dative { VerbKind::Ditransitive } else { VerbKind::Transitive }) {
        r.add(pair, "template", &[&spec.verb], "verb kind does not fit the construction");
    }
    if !spec.implausible {
        for (role, np) in spec.roles() {
            if !fits(lex, &np.noun, &role_set(lex, &spec.verb, role)) {
                r.add(pair, "selectional_restriction", &[&np.noun, &spec.verb], format!("{} outside the verb's restrictions", role.as_str()));
            }
        }
    }
    if np_determiners(spec).len() > 1 {
        r.add(pair, "determiner_agreement", &[text], "noun phrases of one sentence share a determiner");
    }
    if complex_shapes(spec).len() > 1 {
        r.add(pair, "np_complexity", &[text], "more than one complex noun phrase");
    }
    for (_, np) in spec.roles() {
        if let Some(a) = &np.adjective {
            let ok = lex.adjective(a).is_some_and(|e| fits(lex, &np.noun, &e.compatible_categories));
            if !ok {
                r.add(pair, "np_complexity", &[a, &np.noun], "incompatible adjective");
            }
        }
        match &np.pp {
            Some(PrepPhrase::With { adjective, noun, .. }) => {
                let with_ok = lex.noun(noun).is_some_and(|n| {
                    n.categories.iter().all(|c| {
                        matches!(c, Category::Clothing | Category::Device | Category::Container)
                    })
                });
                if !with_ok {
                    r.add(pair, "np_complexity", &[noun], "with-phrase noun must be clothing, device or container");
                }
                if let Some(a) = adjective {
                    let ok = lex.adjective(a).is_some_and(|e| fits(lex, noun, &e.compatible_categories));
                    if !ok {
                        r.add(pair, "np_complexity", &[a, noun], "incompatible adjective");
                    }
                }
            }
            Some(PrepPhrase::From { country }) => {
                let ok = lex
                    .noun(country)
                    .is_some_and(|n| n.categories.contains(&Category::Country));
                if !ok {
                    r.add(pair, "np_complexity", &[country], "from-phrase needs a country");
                }
            }
            None => {}
        }
    }
}

/// Which prime/target relations a condition imposes.
struct Rules {
    /// Function words prime and target may share.
    shared_function_words: &'static [&'static str],
    determiner_contrast: bool,
    tense_contrast: bool,
    preposition_contrast: bool,
}

fn rules(c: Condition) -> Rules {
    let core = Rules {
        shared_function_words: &["by"],
        determiner_contrast: true,
        tense_contrast: true,
        preposition_contrast: true,
    };
    match c {
        Condition::OverlapAllNouns | Condition::OverlapVerb => Rules {
            shared_function_words: &["by", "to", "for"],
            preposition_contrast: false,
            ..core
        },
        Condition::Complexity(_) => Rules {
            shared_function_words: &["by", "with", "from"],
            ..core
        },
        Condition::OverlapFunctionWords | Condition::Identical => Rules {
            shared_function_words: &[],
            determiner_contrast: false,
            tense_contrast: false,
            preposition_contrast: false,
        },
        _ => core,
    }
}

/// Check one prime (and its incongruent counterpart) against the target.
fn check_prime(
    lex: &Lexicon,
    cond: &ConditionSpec,
    target: &Sentence,
    prime: &Sentence,
    incongruent: Option<&Sentence>,
    pair: usize,
    r: &mut Report,
) {
    let p = Some(pair);
    let ps = &prime.spec;
    let ts = &target.spec;
    let name = cond.name;
    if name == Condition::Identical {
        if ps != ts || prime.text != target.text {
            r.add(p, "identical", &[&prime.text, &target.text], "prime must equal the target");
        }
        return;
    }
    let pc = spec_lemmas(ps);
    let tc = spec_lemmas(ts);
    let shared: BTreeSet<&String> = pc.intersection(&tc).collect();
    let dative = ts.construction.alternation() == Some(Alternation::Dative);
    let rule = rules(name);

    // Pairs allowed to be associated: role-matched similar words.
    let mut designated: Vec<(&str, &str)> = Vec::new();
    let similar_verb = matches!(name, Condition::SemSimVerb | Condition::SemSimAll);
    let similar_nouns = matches!(name, Condition::SemSimNouns | Condition::SemSimAll);
    if similar_verb {
        designated.push((&ps.verb, &ts.verb));
    }
    if similar_nouns {
        for (role, np) in ts.roles() {
            if let Some(q) = ps.role(role) {
                designated.push((&q.noun, &np.noun));
            }
        }
    }
    if !designated.is_empty() {
        match cond.similarity_threshold {
            None => r.add(p, "semantic_similarity", &[], "similarity conditions need a threshold"),
            Some(th) => {
                for (a, b) in &designated {
                    let cos = lex.cosine_similarity(a, b).unwrap_or(f64::NEG_INFINITY);
                    if a == b || !lex.is_associated(a, b) || cos < th {
                        r.add(p, "semantic_similarity", &[a, b], format!("role-matched pair must be associated with cosine >= {th}"));
                    }
                }
            }
        }
    }

    // Lexical overlap.
    let expected_shared: BTreeSet<String> = match name {
        Condition::OverlapVerb => [ts.verb.clone()].into(),
        Condition::OverlapAllNouns => ts.roles().map(|(_, np)| np.noun.clone()).collect(),
        Condition::OverlapRandomNoun => {
            let same: Vec<Role> = ts
                .roles()
                .filter(|(role, np)| ps.role(*role).is_some_and(|q| q.noun == np.noun))
                .map(|(role, _)| role)
                .collect();
            if same.len() != 1 {
                r.add(p, "noun_overlap", &[], format!("exactly one role noun must be shared, found {}", same.len()));
            }
            same.iter()
                .map(|role| ts.role(*role).expect("role").noun.clone())
                .collect()
        }
        _ => BTreeSet::new(),
    };
    match name {
        Condition::OverlapVerb if ps.verb != ts.verb => {
            r.add(p, "verb_overlap", &[&ps.verb, &ts.verb], "prime must reuse the target verb");
        }
        Condition::OverlapAllNouns => {
            for (role, np) in ts.roles() {
                if ps.role(role).is_none_or(|q| q.noun != np.noun) {
                    r.add(p, "noun_overlap", &[&np.noun], format!("{} noun must be shared", role.as_str()));
                }
            }
        }
        _ => {}
    }
    let unexpected: Vec<&str> = shared
        .iter()
        .filter(|w| !expected_shared.contains(**w))
        .map(|w| w.as_str())
        .collect();
    if !unexpected.is_empty() {
        r.add(p, "content_disjoint", &unexpected, "prime and target share content words");
    }
    for a in &pc {
        if expected_shared.contains(a) {
            continue;
        }
        for b in &tc {
            if lex.is_associated(a, b) && !designated.contains(&(a.as_str(), b.as_str())) {
                r.add(p, "association", &[a, b], "prime and target words are associated");
            }
        }
    }

    // Function-word relations.
    let pd = ps.determiner();
    let td = ts.determiner();
    if rule.determiner_contrast && pd == td {
        r.add(p, "determiner_contrast", &[], "prime and target must use different determiners");
    }
    if !dative && rule.tense_contrast && ps.tense == ts.tense {
        r.add(p, "tense_contrast", &[], "transitive prime and target must differ in tense");
    }
    let (pp, tp) = (verb_prep(lex, &ps.verb), verb_prep(lex, &ts.verb));
    if dative && rule.preposition_contrast && pp == tp {
        r.add(p, "preposition_contrast", &pp.into_iter().collect::<Vec<_>>(), "dative prime and target must differ in preposition");
    }
    if name == Condition::OverlapFunctionWords {
        if pd != td || ps.tense != ts.tense || (dative && pp != tp) {
            r.add(p, "function_word_overlap", &[], "determiner, tense and preposition must match");
        }
        if normalized_function_words(prime, lex) != normalized_function_words(target, lex) {
            r.add(p, "function_word_overlap", &[&prime.text], "congruent prime must use the target's function words");
        }
    } else if name != Condition::Identical {
        let tf = surface_function_words(&target.text, lex);
        for s in std::iter::once(prime).chain(incongruent) {
            for w in surface_function_words(&s.text, lex).intersection(&tf) {
                if !rule.shared_function_words.contains(&w.as_str()) {
                    r.add(p, "function_word_overlap", &[w], "prime and target share a function word");
                }
            }
        }
    }

    // Plausibility.
    if name == Condition::ImplausiblePrime {
        if !ps.implausible {
            r.add(p, "implausibility", &[&prime.text], "prime must be flagged implausible");
        }
        for (role, np) in ps.roles() {
            if fits(lex, &np.noun, &role_set(lex, &ps.verb, role)) {
                r.add(p, "implausibility", &[&np.noun, &ps.verb], format!("{} respects the verb's restrictions", role.as_str()));
            }
        }
    } else if ps.implausible {
        r.add(p, "implausibility", &[&prime.text], "only implausible-prime items carry implausible primes");
    }

    // Complexity.
    let (pshape, tshape) = (complex_shapes(ps), complex_shapes(ts));
    let ok = match name {
        Condition::Complexity(ComplexityMode::Prime) => pshape.len() == 1 && tshape.is_empty(),
        Condition::Complexity(ComplexityMode::Target) => pshape.is_empty() && tshape.len() == 1,
        Condition::Complexity(ComplexityMode::Both) => {
            pshape.len() == 1 && tshape.len() == 1 && pshape[0] != tshape[0]
        }
        _ => pshape.is_empty() && tshape.is_empty(),
    };
    if !ok {
        r.add(p, "complexity", &[&prime.text, &target.text], "complex noun phrases do not match the condition");
    }
}

fn same_content_alternated(prime: &SentenceSpec, other: &SentenceSpec) -> bool {
    prime.construction.alternated() == Some(other.construction)
        && prime.verb == other.verb
        && prime.tense == other.tense
        && prime.agent == other.agent
        && prime.patient == other.patient
        && prime.recipient == other.recipient
        && prime.implausible == other.implausible
}

/// All constraint violations of one item under `cond`.
pub fn validate_pair(item: &PrimeTargetItem, cond: &ConditionSpec, lex: &Lexicon) -> Vec<Violation> {
    let mut r = Report {
        item_id: &item.id,
        found: BTreeMap::new(),
    };
    if item.schema != ITEM_SCHEMA {
        r.add(None, "schema", &[&item.schema], format!("expected schema {ITEM_SCHEMA}"));
    }
    if item.condition.name != cond.name {
        r.add(None, "condition", &[], format!("item built for {}, validated as {}", item.condition.name, cond.name));
    }
    // Thresholds are a generator output, so the item's own value is the
    // one to check against when the caller did not fix one.
    let cond = &ConditionSpec {
        similarity_threshold: cond.similarity_threshold.or(item.condition.similarity_threshold),
        ..cond.clone()
    };
    let target = &item.target;
    if target.spec.construction != item.structure
        || item.structure.alternation() != Some(item.alternation)
    {
        r.add(None, "target_construction", &[&target.text], "target construction must equal the item structure");
    }
    check_sentence(lex, target, None, &mut r);
    if target.spec.implausible {
        r.add(None, "implausibility", &[&target.text], "targets are always plausible");
    }

    let n = item.prime_pairs.len();
    let count_ok = match cond.name {
        Condition::SemSimAll => (1..=cond.primes_per_target).contains(&n),
        Condition::Identical => n == 1,
        _ => n == cond.primes_per_target,
    };
    if !count_ok {
        r.add(None, "pair_count", &[], format!("{n} prime pairs for primes_per_target = {}", cond.primes_per_target));
    }

    let expected_len = match cond.name {
        Condition::Recency(_) => 4,
        Condition::Cumulative(k) => k as usize,
        _ => 1,
    };
    let expected_inc = if let Condition::Recency(_) = cond.name { 4 } else { 1 };
    let mut seen_primes: HashMap<BTreeSet<String>, usize> = HashMap::new();
    for (i, pair) in item.prime_pairs.iter().enumerate() {
        let p = Some(i);
        for s in pair.congruent.iter().chain(&pair.incongruent) {
            check_sentence(lex, s, p, &mut r);
        }
        if pair.congruent.len() != expected_len || pair.incongruent.len() != expected_inc {
            r.add(p, "context_length", &[], format!(
                "congruent context has {} sentences (expected {expected_len}), incongruent {} (expected {expected_inc})",
                pair.congruent.len(),
                pair.incongruent.len()
            ));
            continue;
        }
        let mut inc_at = 0;
        let primes: Vec<&Sentence> = match cond.name {
            Condition::Recency(pos) => {
                let at = pos as usize - 1;
                inc_at = at;
                for (j, (c, i)) in pair.congruent.iter().zip(&pair.incongruent).enumerate() {
                    if j != at && c != i {
                        r.add(p, "padding_shared", &[&i.text], "both contexts must carry the same padding");
                    }
                }
                for (j, s) in pair.congruent.iter().enumerate() {
                    let is_pad = s.spec.construction == Construction::IntrPad;
                    if is_pad == (j == at) {
                        r.add(p, "padding_position", &[&s.text], format!("prime must be sentence {pos} of 4, padding elsewhere"));
                    }
                }
                vec![&pair.congruent[at]]
            }
            _ => pair.congruent.iter().collect(),
        };
        let incongruent = &pair.incongruent[inc_at];
        for prime in &primes {
            if prime.spec.construction != item.structure {
                r.add(p, "congruent_construction", &[&prime.text], "congruent primes share the target construction");
            }
        }
        let last = primes.last().expect("non-empty context");
        if !same_content_alternated(&last.spec, &incongruent.spec) {
            r.add(p, "incongruent_alternation", &[&incongruent.text], "incongruent prime must carry the same content in the other construction");
        }
        for (j, prime) in primes.iter().enumerate() {
            let inc = (j + 1 == primes.len()).then_some(incongruent);
            check_prime(lex, cond, target, prime, inc, i, &mut r);
            if cond.name != Condition::Identical {
                let key = spec_lemmas(&prime.spec);
                if let Some(prev) = seen_primes.insert(key, i) {
                    r.add(p, "distinct_primes", &[&prime.text], format!("same content words as a prime in pair {prev}"));
                }
            }
        }

        if let Condition::Recency(_) = cond.name {
            let mut near: BTreeSet<String> = spec_lemmas(&target.spec);
            near.extend(spec_lemmas(&primes[0].spec));
            let pads: Vec<&Sentence> = pair
                .congruent
                .iter()
                .filter(|s| s.spec.construction == Construction::IntrPad)
                .collect();
            let texts: BTreeSet<&str> = pads.iter().map(|s| s.text.as_str()).collect();
            if texts.len() != pads.len() {
                r.add(p, "padding_distinct", &[], "padding sentences repeat within a context");
            }
            for pad in pads {
                for w in spec_lemmas(&pad.spec) {
                    if near.contains(&w) {
                        r.add(p, "padding_disjoint", &[&w], "padding reuses a prime or target word");
                    }
                    for other in &near {
                        if lex.is_associated(&w, other) {
                            r.add(p, "padding_disjoint", &[&w, other], "padding word associated with a prime or target word");
                        }
                    }
                }
            }
        }
    }
    r.found.into_values().collect()
}

/// Per-item checks plus corpus-wide uniqueness of targets and ids.
pub fn validate_corpus(items: &[PrimeTargetItem], cond: &ConditionSpec, lex: &Lexicon) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut texts: HashMap<&str, &str> = HashMap::new();
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for item in items {
        out.extend(validate_pair(item, cond, lex));
        if let Some(first) = texts.insert(&item.target.text, &item.id) {
            out.push(Violation {
                item_id: item.id.clone(),
                constraint: "distinct_targets".into(),
                words: vec![item.target.text.clone()],
                pair_index: None,
                detail: format!("target repeats item {first}"),
            });
        }
        if !ids.insert(&item.id) {
            out.push(Violation {
                item_id: item.id.clone(),
                constraint: "distinct_ids".into(),
                words: vec![],
                pair_index: None,
                detail: "item id repeats".into(),
            });
        }
    }
    out
}

/// Count of violations per constraint name.
pub fn summarize(violations: &[Violation]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for v in violations {
        *out.entry(v.constraint.clone()).or_default() += 1;
    }
    out
}
