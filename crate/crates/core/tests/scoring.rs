use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use priming::generator::{build_corpus, join_sentences, Condition, ConditionSpec};
use priming::scoring::*;
use priming::Lexicon;
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straightforward n-gram estimator written from the smoothing formula,
/// kept apart from the library model.
struct Oracle {
    n: usize,
    alpha: f64,
    grams: HashMap<Vec<String>, f64>,
    vocab: BTreeSet<String>,
}

fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in text.to_lowercase().split_whitespace() {
        if let Some(stem) = w.strip_suffix('.') {
            out.push(stem.to_string());
            out.push("</s>".to_string());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

fn closed(text: &str) -> Vec<String> {
    let mut w = words(text);
    if !w.is_empty() && w.last().unwrap() != "</s>" {
        w.push("</s>".into());
    }
    w
}

impl Oracle {
    fn new(corpus: &[&str], n: usize, alpha: f64) -> Self {
        let mut grams = HashMap::new();
        let mut vocab: BTreeSet<String> = ["</s>", "<unk>"].map(String::from).into();
        for line in corpus {
            let mut seq = vec!["<s>".to_string(); n - 1];
            seq.extend(closed(line));
            vocab.extend(seq.iter().filter(|w| *w != "<s>").cloned());
            for win in seq.windows(n) {
                *grams.entry(win.to_vec()).or_insert(0.0) += 1.0;
            }
        }
        Self { n, alpha, grams, vocab }
    }

    fn p(&self, history: &[String], w: &str) -> f64 {
        let w = if self.vocab.contains(w) { w } else { "<unk>" };
        let h: Vec<String> = history
            .iter()
            .map(|x| if x == "<s>" || self.vocab.contains(x) { x.clone() } else { "<unk>".into() })
            .collect();
        let mut key = h.clone();
        key.push(w.to_string());
        let c = self.grams.get(&key).copied().unwrap_or(0.0);
        let total: f64 = self
            .grams
            .iter()
            .filter(|(g, _)| g[..self.n - 1] == h[..])
            .map(|(_, c)| c)
            .sum();
        (c + self.alpha) / (total + self.alpha * self.vocab.len() as f64)
    }

    fn whole(&self, text: &str) -> f64 {
        let mut seq = vec!["<s>".to_string(); self.n - 1];
        let mut lp = 0.0;
        for w in closed(text) {
            lp += self.p(&seq[seq.len() + 1 - self.n..], &w).ln();
            seq.push(w);
        }
        lp
    }
}

fn fixture() -> Lexicon {
    Lexicon::load_dir(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixture"),
        5000,
    )
    .unwrap()
}

#[test]
fn bigram_hand_counts() {
    // Counts: (<s>,a)=2 (a,b)=1 (a,c)=1 (b,</s>)=1 (c,</s>)=1; V = {a,b,c,</s>,<unk>}.
    for alpha in [1.0, 0.5] {
        let m = NGramModel::train(&["a b", "a c"], 2, alpha).unwrap();
        let want = ((2.0 + alpha) / (2.0 + 5.0 * alpha)).ln()
            + ((1.0 + alpha) / (2.0 + 5.0 * alpha)).ln()
            + ((1.0 + alpha) / (1.0 + 5.0 * alpha)).ln();
        let got = m.score(&ScoreRequest::causal("", "a b")).unwrap();
        assert_eq!(got.tokens, ["a", "b", EOS]);
        assert!((got.log_prob - want).abs() < 1e-12);
    }
    let m = NGramModel::train(&["a b", "a c"], 2, 1.0).unwrap();
    let hand = (3.0f64 / 7.0).ln() + (2.0f64 / 7.0).ln() + (2.0f64 / 6.0).ln();
    assert!((m.score(&ScoreRequest::causal("", "a b")).unwrap().log_prob - hand).abs() < 1e-12);
}

#[test]
fn single_line_smoothing() {
    let alpha = 0.7;
    let m = NGramModel::train(&["a b"], 2, alpha).unwrap();
    let v = m.predictable_size() as f64;
    assert_eq!(v, 4.0);
    assert!((m.probability(&["a"], "b") - (1.0 + alpha) / (1.0 + alpha * v)).abs() < 1e-15);
}

#[test]
fn training_is_deterministic() {
    let corpus = ["the dog ran.", "a cat sat on the mat.", "the dog sat"];
    let a = NGramModel::train(&corpus, 3, 0.1).unwrap();
    let b = NGramModel::train(&corpus, 3, 0.1).unwrap();
    assert_eq!(a.identity(), b.identity());
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.save(&mut x).unwrap();
    b.save(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn matches_independent_oracle() {
    let corpus = ["The dog ran. A cat sat.", "the cat ran to the dog.", "a dog sat"];
    let m = NGramModel::train(&corpus, 3, 0.25).unwrap();
    let o = Oracle::new(&corpus, 3, 0.25);
    for (ctx, tgt) in [("", "the dog sat"), ("A cat ran.", "The dog ran."), ("The emu sat.", "a emu ran")] {
        let lib = m.score(&ScoreRequest::causal(ctx, tgt)).unwrap().log_prob;
        let joined = if ctx.is_empty() { tgt.to_string() } else { format!("{ctx} {tgt}") };
        let brute = o.whole(&joined) - o.whole(ctx);
        assert!((lib - brute).abs() < 1e-9, "{ctx} | {tgt}: {lib} vs {brute}");
    }
}

#[test]
fn additivity_on_generated_text() {
    let lex = fixture();
    let cond = ConditionSpec::new(Condition::Cumulative(2), 8).with_size(25, 2);
    let corpus = build_corpus(&cond, &lex).unwrap();
    let mut train = Vec::new();
    let mut pairs = Vec::new();
    for items in corpus.values() {
        for it in items {
            train.push(format!("{}.", it.target.text));
            for p in &it.prime_pairs {
                pairs.push((join_sentences(&p.congruent), it.target.text.clone()));
                pairs.push((join_sentences(&p.incongruent), it.target.text.clone()));
            }
        }
    }
    let m = NGramModel::train(&train, 3, 0.5).unwrap();
    for (ctx, tgt) in &pairs {
        let lib = m.score(&ScoreRequest::causal(ctx.as_str(), tgt.as_str())).unwrap().log_prob;
        let whole = m.sequence_log_prob(&format!("{ctx} {tgt}")) - m.sequence_log_prob(ctx);
        assert!((lib - whole).abs() < 1e-9);
    }
}

#[test]
fn batch_is_schedule_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let words = ["the", "a", "dog", "cat", "ran", "sat.", "on", "mat", "zebra"];
    let sentence = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(1..8);
        (0..n).map(|_| *words.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let corpus: Vec<String> = (0..50).map(|_| sentence(&mut rng)).collect();
    let m = NGramModel::train(&corpus, 3, 0.2).unwrap();
    let reqs: Vec<ScoreRequest> = (0..1000)
        .map(|_| ScoreRequest::causal(sentence(&mut rng) + ".", sentence(&mut rng)))
        .collect();
    let one = batch_score(&reqs, &m, 1).unwrap();
    let eight = batch_score(&reqs, &m, 8).unwrap();
    assert_eq!(one.len(), 1000);
    for (a, b) in one.iter().zip(&eight) {
        assert_eq!(a.tokens, b.tokens);
        assert_eq!(a.log_prob.to_bits(), b.log_prob.to_bits());
        assert!(a.token_log_probs.iter().zip(&b.token_log_probs).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let sequential: Vec<ScoredSequence> = reqs.iter().map(|r| m.score(r).unwrap()).collect();
    assert_eq!(sequential, one);

    let mut order: Vec<usize> = (0..reqs.len()).collect();
    order.shuffle(&mut rng);
    let permuted: Vec<ScoreRequest> = order.iter().map(|&i| reqs[i].clone()).collect();
    let out = batch_score(&permuted, &m, 8).unwrap();
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(out[k], one[i]);
    }
}

#[test]
fn uniform_zero_effect() {
    let u = UniformScorer::new(50);
    let a = u.score(&ScoreRequest::causal("The dog ran.", "A cat sat")).unwrap();
    let b = u.score(&ScoreRequest::causal("Something else entirely.", "A cat sat")).unwrap();
    assert_eq!(a.log_prob, b.log_prob);
    assert!(matches!(u.score(&ScoreRequest::causal("x", " ")), Err(ScoreError::EmptyTarget)));
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["the", "a", "dog", "cat", "ran.", "sat", "mat.", "owl"]), 0..10)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn distributions_sum_to_one(ctx in text(), order in 1usize..5) {
        let m = NGramModel::train(&["the dog ran.", "a cat sat on the mat.", "the cat ran"], order, 0.3).unwrap();
        let total: f64 = m.next_token_distribution(&ctx).iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn larger_alpha_moves_toward_uniform(ctx in text(), a1 in 0.01f64..5.0, extra in 0.01f64..5.0) {
        let m1 = NGramModel::train(&["the dog ran.", "a cat sat on the mat.", "the cat ran"], 2, a1).unwrap();
        let m2 = m1.with_alpha(a1 + extra).unwrap();
        let v = m1.predictable_size() as f64;
        for ((w, p1), (_, p2)) in m1.next_token_distribution(&ctx).into_iter().zip(m2.next_token_distribution(&ctx)) {
            prop_assert!((p2 - 1.0 / v).abs() <= (p1 - 1.0 / v).abs() + 1e-15, "{}", w);
            prop_assert!(p1 > 0.0);
        }
    }

    #[test]
    fn token_terms_sum_to_log_prob(ctx in text(), tgt in text()) {
        prop_assume!(!tgt.trim().is_empty());
        let m = NGramModel::train(&["the dog ran.", "a cat sat"], 3, 1.0).unwrap();
        let s = m.score(&ScoreRequest::causal(ctx, tgt)).unwrap();
        prop_assert_eq!(s.tokens.len(), s.token_log_probs.len());
        prop_assert!(s.token_log_probs.iter().all(|&x| x.is_finite() && x < 0.0));
        prop_assert!((s.log_prob - s.token_log_probs.iter().sum::<f64>()).abs() <= 1e-9);
    }
}
