use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::condition::{ComplexityMode, Condition, ConditionSpec, InvalidCondition};
use super::realize::{alternate, realize, RealizeError};
use super::sampler::{
    content_lemmas, label_hash, role_slot, shuffle, stream, verb_roles, Avoid, Failures,
    NounRule, Plan, Pools, PrepRule, VerbRule, SLOT_BUDGET,
};
use super::types::*;
use crate::lexicon::{similarity_threshold, Lexicon, LexiconError};

/// Targets in the core sample used to calibrate the similarity cutoff.
const CALIBRATION_TARGETS: usize = 200;
const CALIBRATION_PERCENTILE: f64 = 90.0;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Invalid(#[from] InvalidCondition),
    #[error(
        "{condition} {structure}: produced {produced} of {requested} targets; \
         most frequent failing constraint: {constraint}"
    )]
    Exhausted {
        condition: String,
        structure: Construction,
        constraint: String,
        produced: usize,
        requested: usize,
    },
    #[error(transparent)]
    Realize(#[from] RealizeError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

/// Build the items for all four target structures.
pub fn build_corpus(
    cond: &ConditionSpec,
    lex: &Lexicon,
) -> Result<BTreeMap<Construction, Vec<PrimeTargetItem>>, GenerationError> {
    let cond = resolve(cond, lex)?;
    Construction::TARGETS
        .into_iter()
        .map(|s| Ok((s, build_structure(&cond, s, lex)?)))
        .collect()
}

fn resolve(cond: &ConditionSpec, lex: &Lexicon) -> Result<ConditionSpec, GenerationError> {
    cond.validate()?;
    let mut cond = cond.clone();
    if cond.name.is_semantic_similarity() && cond.similarity_threshold.is_none() {
        cond.similarity_threshold = Some(core_similarity_threshold(lex, cond.seed)?);
    }
    Ok(cond)
}

/// 90th percentile of role-matched prime/target cosine similarities over a
/// core sample of 200 targets (50 per structure) drawn with `seed`.
pub fn core_similarity_threshold(lex: &Lexicon, seed: u64) -> Result<f64, GenerationError> {
    let per = CALIBRATION_TARGETS / Construction::TARGETS.len();
    let spec = ConditionSpec::new(Condition::Core, seed).with_size(per, 10);
    let mut sims = Vec::new();
    for s in Construction::TARGETS {
        for item in build_structure(&spec, s, lex)? {
            let t = &item.target.spec;
            for pair in &item.prime_pairs {
                let p = &pair.congruent[0].spec;
                sims.push(lex.cosine_similarity(&p.verb, &t.verb)?);
                for (role, np) in t.roles() {
                    if let Some(other) = p.role(role) {
                        sims.push(lex.cosine_similarity(&other.noun, &np.noun)?);
                    }
                }
            }
        }
    }
    Ok(similarity_threshold(&sims, CALIBRATION_PERCENTILE)?)
}

/// Build the items for one target structure. Targets are drawn in sequence
/// from one stream; each target's primes come from a stream derived from
/// its candidate index, so parallel filling does not affect the output.
pub fn build_structure(
    cond: &ConditionSpec,
    structure: Construction,
    lex: &Lexicon,
) -> Result<Vec<PrimeTargetItem>, GenerationError> {
    if structure.alternation().is_none() {
        return Err(InvalidCondition(format!("{structure} cannot be a target")).into());
    }
    let cond = resolve(cond, lex)?;
    let pools = Pools::new(lex, cond.similarity_threshold);
    let label = cond.name.label();
    let base = [label_hash(&label), structure as u64];
    let wanted = cond.targets_per_structure;
    let max_candidates = if cond.name == Condition::SemSimAll {
        wanted * 20 + 200
    } else {
        wanted * 4 + 200
    };

    let mut target_rng = stream(cond.seed, &[base[0], base[1], 0]);
    let mut seen = HashSet::new();
    let mut failures = Failures::default();
    let mut items: Vec<PrimeTargetItem> = Vec::with_capacity(wanted);
    let mut candidates = 0usize;
    let mut exhausted_targets = false;

    while items.len() < wanted && candidates < max_candidates && !exhausted_targets {
        let chunk = (wanted - items.len()).max(16).min(max_candidates - candidates);
        let mut batch = Vec::with_capacity(chunk);
        for _ in 0..chunk {
            match next_target(&pools, &cond, structure, &mut target_rng, &mut seen, &mut failures) {
                Some(t) => {
                    batch.push((candidates, t));
                    candidates += 1;
                }
                None => {
                    exhausted_targets = true;
                    break;
                }
            }
        }
        let filled: Vec<(Sentence, Result<Vec<PrimePair>, Failures>)> = batch
            .into_par_iter()
            .map(|(index, target)| {
                let mut rng = stream(cond.seed, &[base[0], base[1], 1, index as u64]);
                let pairs = fill(&pools, &cond, &target, &mut rng);
                (target, pairs)
            })
            .collect();
        for (target, pairs) in filled {
            if items.len() == wanted {
                break;
            }
            match pairs {
                Ok(prime_pairs) => items.push(PrimeTargetItem {
                    schema: ITEM_SCHEMA.to_string(),
                    id: format!("{label}:{structure}:{}:{}", cond.seed, items.len()),
                    alternation: structure.alternation().expect("target structure"),
                    structure,
                    condition: cond.clone(),
                    target,
                    prime_pairs,
                }),
                Err(f) => failures.merge(&f),
            }
        }
    }

    let partial_ok = cond.name == Condition::SemSimAll && !items.is_empty();
    if items.len() < wanted && !partial_ok {
        return Err(GenerationError::Exhausted {
            condition: label,
            structure,
            constraint: failures.worst().unwrap_or("target_space").to_string(),
            produced: items.len(),
            requested: wanted,
        });
    }
    Ok(items)
}

fn random_determiner<R: Rng>(rng: &mut R) -> Determiner {
    if rng.random_bool(0.5) {
        Determiner::Definite
    } else {
        Determiner::Indefinite
    }
}

fn random_shape<R: Rng>(rng: &mut R, not: Option<NpShape>) -> NpShape {
    let shapes: Vec<NpShape> = NpShape::COMPLEX
        .into_iter()
        .filter(|s| Some(*s) != not)
        .collect();
    *shapes.choose(rng).expect("three shapes")
}

fn next_target<R: Rng>(
    pools: &Pools,
    cond: &ConditionSpec,
    structure: Construction,
    rng: &mut R,
    seen: &mut HashSet<String>,
    failures: &mut Failures,
) -> Option<Sentence> {
    for _ in 0..SLOT_BUDGET {
        let tense = match structure.alternation() {
            Some(Alternation::Transitive) if rng.random_bool(0.5) => Tense::Present,
            _ => Tense::Past,
        };
        let mut plan = Plan::free(structure, tense, random_determiner(rng));
        if let Condition::Complexity(ComplexityMode::Target | ComplexityMode::Both) = cond.name {
            plan.complex = Some(random_shape(rng, None));
        }
        if cond.name.is_semantic_similarity() {
            plan.need_partners = true;
        }
        let spec = pools.sample(&plan, rng, failures, |_| true)?;
        let sentence = realize(&spec, pools.lex).expect("sampled specs realize");
        if seen.insert(sentence.text.clone()) {
            return Some(sentence);
        }
        failures.hit("distinct_targets");
    }
    None
}

/// Prime plan for a core-like condition relative to `target`.
fn prime_plan<'a, R: Rng>(
    cond: &ConditionSpec,
    target: &'a SentenceSpec,
    avoid: &'a Avoid,
    pools: &Pools,
    rng: &mut R,
) -> Plan<'a> {
    let dative = target.construction.alternation() == Some(Alternation::Dative);
    let target_prep = pools
        .lex
        .verb(&target.verb)
        .and_then(|v| v.po_preposition);
    let det = target.determiner().expect("target has noun phrases");
    let same_function_words = cond.name == Condition::OverlapFunctionWords;
    let mut plan = Plan::free(
        target.construction,
        match (dative, same_function_words) {
            (true, _) => Tense::Past,
            (false, true) => target.tense,
            (false, false) => target.tense.other(),
        },
        if same_function_words { det } else { det.other() },
    );
    plan.avoid = Some(avoid);
    plan.prep = match (dative, cond.name, target_prep) {
        (false, _, _) | (_, _, None) => PrepRule::Any,
        (true, Condition::OverlapFunctionWords, Some(p)) => PrepRule::Same(p),
        (true, Condition::OverlapAllNouns | Condition::OverlapVerb, _) => PrepRule::Any,
        (true, _, Some(p)) => PrepRule::Differ(p),
    };
    let roles = verb_roles(target.construction);
    let noun_of = |r: Role| target.role(r).expect("target role").noun.as_str();
    match cond.name {
        Condition::SemSimVerb => plan.verb = VerbRule::Similar(&target.verb),
        Condition::SemSimNouns => {
            for &r in roles {
                plan.nouns[role_slot(r)] = NounRule::Similar(noun_of(r));
            }
        }
        Condition::SemSimAll => {
            plan.verb = VerbRule::Similar(&target.verb);
            for &r in roles {
                plan.nouns[role_slot(r)] = NounRule::Similar(noun_of(r));
            }
        }
        Condition::OverlapRandomNoun => {
            let r = *roles.choose(rng).expect("roles");
            plan.nouns[role_slot(r)] = NounRule::Fixed(noun_of(r));
        }
        Condition::OverlapAllNouns => {
            for &r in roles {
                plan.nouns[role_slot(r)] = NounRule::Fixed(noun_of(r));
            }
        }
        Condition::OverlapVerb => plan.verb = VerbRule::Fixed(&target.verb),
        Condition::ImplausiblePrime => {
            plan.implausible = true;
            for &r in roles {
                plan.nouns[role_slot(r)] = NounRule::Implausible;
            }
        }
        Condition::Complexity(ComplexityMode::Prime) => plan.complex = Some(random_shape(rng, None)),
        Condition::Complexity(ComplexityMode::Both) => {
            let target_shape = target
                .roles()
                .map(|(_, np)| np.shape())
                .find(|s| *s != NpShape::Simple);
            plan.complex = Some(random_shape(rng, target_shape));
        }
        _ => {}
    }
    plan
}

fn pair_for(spec: &SentenceSpec, lex: &Lexicon) -> (Sentence, Sentence) {
    let congruent = realize(spec, lex).expect("sampled specs realize");
    let incongruent =
        realize(&alternate(spec).expect("alternating"), lex).expect("alternated specs realize");
    (congruent, incongruent)
}

fn fill<R: Rng>(
    pools: &Pools,
    cond: &ConditionSpec,
    target: &Sentence,
    rng: &mut R,
) -> Result<Vec<PrimePair>, Failures> {
    let lex = pools.lex;
    let mut fails = Failures::default();
    let t = &target.spec;
    if cond.name == Condition::Identical {
        let (c, i) = pair_for(t, lex);
        return Ok(vec![PrimePair {
            congruent: vec![c],
            incongruent: vec![i],
        }]);
    }
    let avoid = Avoid::new(lex, &target.content_lemmas);
    if cond.name == Condition::SemSimAll {
        return enumerate_similar(pools, cond, t, &avoid, rng);
    }
    let mut used: BTreeSet<BTreeSet<String>> = BTreeSet::new();
    let mut pairs = Vec::with_capacity(cond.primes_per_target);
    let per_context = match cond.name {
        Condition::Cumulative(k) => k as usize,
        _ => 1,
    };
    for _ in 0..cond.primes_per_target {
        let mut primes = Vec::with_capacity(per_context);
        for _ in 0..per_context {
            let plan = prime_plan(cond, t, &avoid, pools, rng);
            let spec = pools
                .sample(&plan, rng, &mut fails, |l| !used.contains(l))
                .ok_or_else(|| fails.clone())?;
            used.insert(content_lemmas(&spec));
            primes.push(spec);
        }
        let (last_congruent, incongruent) = pair_for(primes.last().expect("k >= 1"), lex);
        let mut congruent: Vec<Sentence> = primes[..primes.len() - 1]
            .iter()
            .map(|s| realize(s, lex).expect("sampled specs realize"))
            .collect();
        congruent.push(last_congruent);

        if let Condition::Recency(position) = cond.name {
            let mut pad_avoid = avoid.clone();
            pad_avoid.extend(lex, &congruent[0].content_lemmas);
            let pads = pools
                .padding(&pad_avoid, 3, rng, &mut fails)
                .ok_or_else(|| fails.clone())?;
            let pads: Vec<Sentence> = pads
                .iter()
                .map(|p| realize(p, lex).expect("padding realizes"))
                .collect();
            // Both contexts share the padding; only the prime's structure differs.
            let at = position as usize - 1;
            let mut c = pads.clone();
            c.insert(at, congruent.pop().expect("prime"));
            let mut i = pads;
            i.insert(at, incongruent);
            pairs.push(PrimePair {
                congruent: c,
                incongruent: i,
            });
            continue;
        }
        pairs.push(PrimePair {
            congruent,
            incongruent: vec![incongruent],
        });
    }
    Ok(pairs)
}

/// All admissible similar primes for a target, shuffled, at most
/// `primes_per_target` of them.
fn enumerate_similar<R: Rng>(
    pools: &Pools,
    cond: &ConditionSpec,
    t: &SentenceSpec,
    avoid: &Avoid,
    rng: &mut R,
) -> Result<Vec<PrimePair>, Failures> {
    let lex = pools.lex;
    let mut fails = Failures::default();
    let plan = prime_plan(cond, t, avoid, pools, rng);
    let roles = verb_roles(t.construction);
    let mut found: Vec<SentenceSpec> = Vec::new();
    for verb in pools.verbs_for(t.construction) {
        let prep_ok = match plan.prep {
            PrepRule::Any => true,
            PrepRule::Differ(p) => verb.po_preposition != Some(p),
            PrepRule::Same(p) => verb.po_preposition == Some(p),
        };
        if !prep_ok
            || !pools.similar(&t.verb).contains(&verb.lemma.as_str())
            || !avoid.allows_with_partner(lex, &verb.lemma, &t.verb)
        {
            continue;
        }
        let mut options: Vec<Vec<&str>> = Vec::new();
        for &r in roles {
            let target_noun = &t.role(r).expect("target role").noun;
            let sims = pools.similar(target_noun);
            options.push(
                pools
                    .compatible(&verb.lemma, r)
                    .iter()
                    .map(|n| n.lemma.as_str())
                    .filter(|n| sims.contains(n))
                    .filter(|n| avoid.allows_with_partner(lex, n, target_noun))
                    .collect(),
            );
        }
        for combo in cartesian(&options) {
            let distinct: BTreeSet<&str> = combo.iter().copied().collect();
            if distinct.len() != combo.len() {
                continue;
            }
            let mut spec = SentenceSpec {
                verb: verb.lemma.clone(),
                tense: plan.tense,
                ..t.clone()
            };
            for (&r, noun) in roles.iter().zip(&combo) {
                *spec.role_mut(r) = Some(NounPhraseSpec::simple(noun, plan.determiner));
            }
            found.push(spec);
        }
    }
    if found.is_empty() {
        fails.hit("semantic_similarity");
        return Err(fails);
    }
    shuffle(&mut found, rng);
    found.truncate(cond.primes_per_target);
    Ok(found
        .iter()
        .map(|s| {
            let (c, i) = pair_for(s, lex);
            PrimePair {
                congruent: vec![c],
                incongruent: vec![i],
            }
        })
        .collect())
}

fn cartesian<'a>(options: &[Vec<&'a str>]) -> Vec<Vec<&'a str>> {
    let mut out: Vec<Vec<&str>> = vec![Vec::new()];
    for opts in options {
        out = out
            .iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(*o);
                    v
                })
            })
            .collect();
    }
    out
}
