use std::path::PathBuf;

use priming::generator::*;
use priming::grammar::recognize;
use priming::validator::{validate_corpus, validate_pair};
use priming::Lexicon;
use proptest::prelude::*;

fn data(dir: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(dir)
}

fn full() -> Lexicon {
    Lexicon::load_dir(data("lexicon"), 5000).unwrap()
}

fn fixture() -> Lexicon {
    Lexicon::load_dir(data("fixture"), 5000).unwrap()
}

fn np(noun: &str, det: Determiner) -> Option<NounPhraseSpec> {
    Some(NounPhraseSpec::simple(noun, det))
}

fn spec(c: Construction, verb: &str, tense: Tense) -> SentenceSpec {
    SentenceSpec {
        construction: c,
        verb: verb.into(),
        tense,
        agent: None,
        patient: None,
        recipient: None,
        pronoun_subject: None,
        auxiliary: None,
        implausible: false,
    }
}

#[test]
fn realizes_reference_sentences() {
    let lex = full();
    let the = Determiner::Definite;
    let a = Determiner::Indefinite;

    let mut s = spec(Construction::Do, "throw", Tense::Past);
    s.agent = np("guest", the);
    s.recipient = np("lady", the);
    s.patient = np("pot", the);
    assert_eq!(realize(&s, &lex).unwrap().text, "The guest threw the lady the pot");

    let mut s = spec(Construction::Pass, "purchase", Tense::Past);
    s.agent = np("nurse", the);
    s.patient = np("beer", the);
    assert_eq!(realize(&s, &lex).unwrap().text, "The beer was purchased by the nurse");

    let mut s = spec(Construction::Pass, "wrap", Tense::Present);
    s.agent = np("colonel", a);
    s.patient = np("engine", a);
    assert_eq!(realize(&s, &lex).unwrap().text, "An engine is wrapped by a colonel");
}

#[test]
fn padding_sentences() {
    let lex = full();
    let pad = |p: &str, aux: &str, v: &str| {
        let mut s = spec(Construction::IntrPad, v, Tense::Present);
        s.pronoun_subject = Some(p.into());
        s.auxiliary = Some(aux.into());
        realize(&s, &lex).unwrap().text
    };
    assert_eq!(pad("you", "might", "come"), "You might come");
    assert_eq!(pad("he", "did", "remain"), "He did remain");
}

#[test]
fn recency_contexts_differ_only_at_the_prime() {
    let lex = full();
    for pos in 1..=4u8 {
        let at = pos as usize - 1;
        let cond = ConditionSpec::new(Condition::Recency(pos), 3).with_size(5, 2);
        for item in build_structure(&cond, Construction::Po, &lex).unwrap() {
            for p in &item.prime_pairs {
                assert_eq!((p.congruent.len(), p.incongruent.len()), (4, 4));
                for j in 0..4 {
                    assert_eq!(p.congruent[j] == p.incongruent[j], j != at);
                }
                assert_eq!(alternate(&p.congruent[at].spec).unwrap(), p.incongruent[at].spec);
            }
        }
    }
}

#[test]
fn articles() {
    assert_eq!(indefinite_article("engine"), "an");
    assert_eq!(indefinite_article("pilot"), "a");
    assert_eq!(indefinite_article("hour"), "an");
    assert_eq!(indefinite_article("university"), "a");
    assert_eq!(indefinite_article("European"), "a");
    assert_eq!(indefinite_article("umbrella"), "an");
}

#[test]
fn rejects_bad_specs() {
    let lex = fixture();
    let the = Determiner::Definite;
    let mut s = spec(Construction::Do, "give", Tense::Present);
    s.agent = np("doctor", the);
    s.recipient = np("nurse", the);
    s.patient = np("book", the);
    assert_eq!(realize(&s, &lex), Err(RealizeError::DativeTense));

    s.tense = Tense::Past;
    s.patient = np("dog", the);
    assert!(matches!(realize(&s, &lex), Err(RealizeError::CategoryMismatch { .. })));
    s.implausible = true;
    assert_eq!(realize(&s, &lex).unwrap().text, "The doctor gave the nurse the dog");

    let mut s = spec(Construction::Act, "give", Tense::Past);
    s.agent = np("doctor", the);
    s.patient = np("book", the);
    assert!(matches!(realize(&s, &lex), Err(RealizeError::WrongVerbKind { .. })));
}

#[test]
fn generated_sentences_parse_back() {
    let lex = full();
    let cond = ConditionSpec::new(Condition::Complexity(ComplexityMode::Both), 3).with_size(20, 3);
    for items in build_corpus(&cond, &lex).unwrap().values() {
        for item in items {
            let sentences = std::iter::once(&item.target)
                .chain(item.prime_pairs.iter().flat_map(|p| p.congruent.iter().chain(&p.incongruent)));
            for s in sentences {
                let mut expected = s.spec.clone();
                expected.implausible = false;
                assert_eq!(recognize(&s.text, &lex).unwrap(), expected, "{}", s.text);
            }
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let lex = fixture();
    let cond = ConditionSpec::new(Condition::Core, 9).with_size(30, 4);
    let a = serde_json::to_string(&build_corpus(&cond, &lex).unwrap()).unwrap();
    let b = serde_json::to_string(&build_corpus(&cond, &lex).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = ConditionSpec::new(Condition::Core, 10).with_size(30, 4);
    assert_ne!(a, serde_json::to_string(&build_corpus(&other, &lex).unwrap()).unwrap());
}

#[test]
fn fixture_corpus_is_clean() {
    let lex = fixture();
    for c in [Condition::Core, Condition::OverlapVerb, Condition::Recency(2), Condition::Cumulative(3)] {
        let cond = ConditionSpec::new(c, 4).with_size(20, 3);
        for items in build_corpus(&cond, &lex).unwrap().values() {
            assert_eq!(items.len(), 20);
            assert_eq!(validate_corpus(items, &cond, &lex), vec![]);
        }
    }
}

#[test]
fn identical_needs_one_prime() {
    let lex = fixture();
    let cond = ConditionSpec::new(Condition::Identical, 1).with_size(5, 2);
    assert!(matches!(build_corpus(&cond, &lex), Err(GenerationError::Invalid(_))));
}

/// Re-realize a congruent prime with `edit` applied and rebuild its
/// incongruent partner.
fn mutate(
    item: &PrimeTargetItem,
    lex: &Lexicon,
    edit: impl Fn(&mut SentenceSpec),
) -> Option<PrimeTargetItem> {
    let mut spec = item.prime_pairs[0].congruent[0].spec.clone();
    edit(&mut spec);
    let prime = realize(&spec, lex).ok()?;
    let other = realize(&alternate(&spec).ok()?, lex).ok()?;
    let mut out = item.clone();
    out.prime_pairs[0] = PrimePair {
        congruent: vec![prime],
        incongruent: vec![other],
    };
    Some(out)
}

#[test]
fn injected_verb_overlap_is_the_only_violation() {
    let lex = full();
    let cond = ConditionSpec::new(Condition::Core, 21).with_size(40, 2);
    let items = build_structure(&cond, Construction::Act, &lex).unwrap();
    let mutated = items
        .iter()
        .find_map(|it| mutate(it, &lex, |s| s.verb = it.target.spec.verb.clone()))
        .expect("some prime accepts the target verb");
    let v = validate_pair(&mutated, &cond, &lex);
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].constraint, "content_disjoint");
    assert_eq!(v[0].words, std::slice::from_ref(&mutated.target.spec.verb));
    assert_eq!(v[0].pair_index, Some(0));
}

#[test]
fn injected_association_is_the_only_violation() {
    let lex = fixture();
    let cond = ConditionSpec::new(Condition::Core, 2).with_size(60, 2);
    let items = build_structure(&cond, Construction::Act, &lex).unwrap();
    let mutated = items
        .iter()
        .filter(|it| it.target.content_lemmas.contains("doctor"))
        .find_map(|it| {
            mutate(it, &lex, |s| {
                let role = s.roles().find(|(_, n)| n.noun != "nurse").map(|(r, _)| r).unwrap();
                s.role_mut(role).as_mut().unwrap().noun = "nurse".into();
            })
            .filter(|m| !m.target.content_lemmas.contains("nurse"))
        })
        .expect("a doctor target whose prime can take `nurse`");
    let v = validate_pair(&mutated, &cond, &lex);
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].constraint, "association");
    assert!(v[0].words.contains(&"nurse".to_string()));
}

#[test]
fn synthetic_text_respects_share() {
    let lex = fixture();
    let cfg = SyntheticTextConfig {
        documents: 400,
        sentences_per_document: 5,
        do_share: 0.9,
        seed: 1,
    };
    let docs = synthetic_dative_text(&lex, &cfg).unwrap();
    assert_eq!(docs.len(), 400);
    let (mut d, mut p) = (0, 0);
    for doc in &docs {
        for s in doc.split(". ").map(|s| s.trim_end_matches('.')) {
            match recognize(s, &lex).unwrap().construction {
                Construction::Do => d += 1,
                Construction::Po => p += 1,
                c => panic!("unexpected {c}"),
            }
        }
    }
    let share = d as f64 / (d + p) as f64;
    assert!((share - 0.9).abs() < 0.03, "{share}");
    let bad = SyntheticTextConfig { do_share: 1.5, ..cfg };
    assert!(synthetic_dative_text(&lex, &bad).is_err());
}

#[test]
fn similarity_threshold_is_moderate() {
    let t = core_similarity_threshold(&full(), 0).unwrap();
    assert!((0.2..0.8).contains(&t), "{t}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alternation_is_an_involution(seed in any::<u64>()) {
        let lex = fixture();
        let cond = ConditionSpec::new(Condition::Core, seed).with_size(4, 2);
        for items in build_corpus(&cond, &lex).unwrap().values() {
            for item in items {
                let s = &item.target.spec;
                let back = alternate(&alternate(s).unwrap()).unwrap();
                prop_assert_eq!(&back, s);
                let pair = &item.prime_pairs[0];
                prop_assert_eq!(&alternate(&pair.congruent[0].spec).unwrap(), &pair.incongruent[0].spec);
            }
        }
    }

    #[test]
    fn every_item_has_the_requested_shape(seed in any::<u64>(), k in 1u8..=5) {
        let lex = fixture();
        let cond = ConditionSpec::new(Condition::Cumulative(k), seed).with_size(3, 2);
        for (structure, items) in build_corpus(&cond, &lex).unwrap() {
            prop_assert_eq!(items.len(), 3);
            for item in items {
                prop_assert_eq!(item.structure, structure);
                for pair in &item.prime_pairs {
                    prop_assert_eq!(pair.congruent.len(), k as usize);
                    prop_assert_eq!(pair.incongruent.len(), 1);
                    prop_assert!(pair.congruent.iter().all(|s| s.construction() == structure));
                }
            }
        }
    }
}
