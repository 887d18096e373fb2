//! Additively smoothed n-gram language model over the reference
//! tokenizer.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tokenize::{tokenize, tokenize_target};
use super::{ScoreError, ScoreMode, ScoreRequest, ScoredSequence, Scorer};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const BOS_ID: u32 = 0;
const UNK_ID: u32 = 2;

#[derive(Debug, Error)]
pub enum NGramError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("alpha must be finite and positive, got {0}")]
    InvalidAlpha(f64),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Clone, Debug)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// Full n-gram counts, history followed by the predicted token.
    ngrams: HashMap<Vec<u32>, u64>,
    /// How often each history was followed by any token.
    histories: HashMap<Vec<u32>, u64>,
}

/// On-disk form: sorted so that equal models serialize identically.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    alpha: f64,
    words: Vec<String>,
    ngrams: Vec<(Vec<u32>, u64)>,
}

fn check_params(order: usize, alpha: f64) -> Result<(), NGramError> {
    if order == 0 {
        return Err(NGramError::InvalidOrder(order));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(NGramError::InvalidAlpha(alpha));
    }
    Ok(())
}

impl NGramModel {
    pub fn train<S: AsRef<str>>(corpus: &[S], order: usize, alpha: f64) -> Result<Self, NGramError> {
        check_params(order, alpha)?;
        let lines: Vec<Vec<String>> = corpus
            .iter()
            .map(|l| tokenize_target(l.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        if lines.is_empty() {
            return Err(NGramError::EmptyCorpus);
        }
        let types: BTreeSet<&str> = lines
            .iter()
            .flatten()
            .map(String::as_str)
            .filter(|w| ![BOS, EOS, UNK].contains(w))
            .collect();
        let words: Vec<String> = [BOS, EOS, UNK]
            .into_iter()
            .chain(types)
            .map(str::to_string)
            .collect();
        let mut model = Self::empty(order, alpha, words);
        for line in &lines {
            let seq = model.padded(line.iter().map(String::as_str));
            for end in order - 1..seq.len() {
                *model.ngrams.entry(seq[end + 1 - order..=end].to_vec()).or_default() += 1;
            }
        }
        model.rebuild_histories();
        Ok(model)
    }

    fn empty(order: usize, alpha: f64, words: Vec<String>) -> Self {
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Self {
            order,
            alpha,
            words,
            ids,
            ngrams: HashMap::new(),
            histories: HashMap::new(),
        }
    }

    fn rebuild_histories(&mut self) {
        self.histories.clear();
        for (gram, c) in &self.ngrams {
            *self.histories.entry(gram[..gram.len() - 1].to_vec()).or_default() += c;
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same counts, different smoothing constant.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, NGramError> {
        check_params(self.order, alpha)?;
        Ok(Self {
            alpha,
            ..self.clone()
        })
    }

    /// Every type including the boundary and unknown markers.
    pub fn vocabulary(&self) -> &[String] {
        &self.words
    }

    /// Number of predictable types: everything except BOS.
    pub fn predictable_size(&self) -> usize {
        self.words.len() - 1
    }

    pub fn count(&self, gram: &[&str]) -> u64 {
        let ids: Vec<u32> = gram.iter().map(|w| self.id(w)).collect();
        self.ngrams.get(&ids[..]).copied().unwrap_or(0)
    }

    fn id(&self, w: &str) -> u32 {
        self.ids.get(w).copied().unwrap_or(UNK_ID)
    }

    /// Token ids with `order - 1` BOS markers in front.
    fn padded<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<u32> {
        let mut seq = vec![BOS_ID; self.order - 1];
        seq.extend(tokens.into_iter().map(|w| self.id(w)));
        seq
    }

    fn prob_ids(&self, history: &[u32], w: u32) -> f64 {
        let mut key = Vec::with_capacity(history.len() + 1);
        key.extend_from_slice(history);
        key.push(w);
        let c = self.ngrams.get(&key).copied().unwrap_or(0) as f64;
        let h = self.histories.get(history).copied().unwrap_or(0) as f64;
        (c + self.alpha) / (h + self.alpha * self.predictable_size() as f64)
    }

    /// P(word | history), where `history` holds at least `order - 1`
    /// tokens (shorter histories are BOS-padded).
    pub fn probability(&self, history: &[&str], word: &str) -> f64 {
        let seq = self.padded(history.iter().copied());
        self.prob_ids(&seq[seq.len() + 1 - self.order..], self.id(word))
    }

    /// Next-token distribution after `text` (tokenized without an
    /// appended EOS), over every predictable type.
    pub fn next_token_distribution(&self, text: &str) -> Vec<(String, f64)> {
        let toks = tokenize(text);
        let seq = self.padded(toks.iter().map(String::as_str));
        let history = &seq[seq.len() + 1 - self.order..];
        (1..self.words.len() as u32)
            .map(|w| (self.words[w as usize].clone(), self.prob_ids(history, w)))
            .collect()
    }

    /// Log-probability of each target token given the context.
    fn score_tokens(&self, context: &[String], target: &[String]) -> Vec<f64> {
        let mut seq = self.padded(context.iter().map(String::as_str));
        let mut out = Vec::with_capacity(target.len());
        for w in target {
            let id = self.id(w);
            let history = &seq[seq.len() + 1 - self.order..];
            out.push(self.prob_ids(history, id).ln());
            seq.push(id);
        }
        out
    }

    /// Log-probability of a whole text scored from the start, with the
    /// same EOS convention as training lines.
    pub fn sequence_log_prob(&self, text: &str) -> f64 {
        self.score_tokens(&[], &tokenize_target(text)).iter().sum()
    }

    pub fn save<W: Write>(&self, w: W) -> Result<(), NGramError> {
        let mut ngrams: Vec<(Vec<u32>, u64)> =
            self.ngrams.iter().map(|(k, v)| (k.clone(), *v)).collect();
        ngrams.sort();
        let file = ModelFile {
            order: self.order,
            alpha: self.alpha,
            words: self.words.clone(),
            ngrams,
        };
        serde_json::to_writer(w, &file).map_err(|e| NGramError::Format(e.to_string()))
    }

    pub fn load<R: Read>(r: R) -> Result<Self, NGramError> {
        let file: ModelFile =
            serde_json::from_reader(r).map_err(|e| NGramError::Format(e.to_string()))?;
        check_params(file.order, file.alpha)?;
        if file.words.get(..3) != Some(&[BOS.to_string(), EOS.to_string(), UNK.to_string()][..]) {
            return Err(NGramError::Format("vocabulary must start with <s> </s> <unk>".into()));
        }
        let n = file.words.len() as u32;
        let mut model = Self::empty(file.order, file.alpha, file.words);
        if model.ids.len() != n as usize {
            return Err(NGramError::Format("duplicate vocabulary entries".into()));
        }
        for (gram, c) in file.ngrams {
            if gram.len() != model.order || gram.iter().any(|&i| i >= n) {
                return Err(NGramError::Format(format!("bad n-gram {gram:?}")));
            }
            model.ngrams.insert(gram, c);
        }
        if model.ngrams.is_empty() {
            return Err(NGramError::EmptyCorpus);
        }
        model.rebuild_histories();
        Ok(model)
    }

    /// Order-independent digest of the count table.
    fn fingerprint(&self) -> u64 {
        let mut grams: Vec<(&Vec<u32>, &u64)> = self.ngrams.iter().collect();
        grams.sort();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for w in &self.words {
            for b in w.bytes() {
                eat(b as u64);
            }
            eat(u64::MAX);
        }
        for (g, c) in grams {
            g.iter().for_each(|&i| eat(i as u64));
            eat(*c);
        }
        h
    }
}

impl Scorer for NGramModel {
    fn identity(&self) -> String {
        format!(
            "ngram(order={}, alpha={}, vocab={}, counts={:016x})",
            self.order,
            self.alpha,
            self.words.len(),
            self.fingerprint()
        )
    }

    fn supports(&self, mode: ScoreMode) -> bool {
        mode == ScoreMode::Causal
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoredSequence, ScoreError> {
        if !self.supports(request.mode) {
            return Err(ScoreError::UnsupportedMode {
                scorer: "ngram".into(),
                mode: request.mode,
            });
        }
        let target = tokenize_target(&request.target);
        if target.is_empty() {
            return Err(ScoreError::EmptyTarget);
        }
        let lps = self.score_tokens(&tokenize(&request.context), &target);
        Ok(ScoredSequence::from_tokens(target, lps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_are_checked() {
        assert!(matches!(NGramModel::train(&["a"], 0, 1.0), Err(NGramError::InvalidOrder(0))));
        assert!(matches!(NGramModel::train(&["a"], 2, 0.0), Err(NGramError::InvalidAlpha(_))));
        assert!(matches!(NGramModel::train(&["a"], 2, f64::NAN), Err(NGramError::InvalidAlpha(_))));
        assert!(matches!(NGramModel::train::<&str>(&[], 2, 1.0), Err(NGramError::EmptyCorpus)));
        assert!(matches!(NGramModel::train(&["  "], 2, 1.0), Err(NGramError::EmptyCorpus)));
    }

    #[test]
    fn unigram_ignores_history() {
        let m = NGramModel::train(&["a a b"], 1, 1.0).unwrap();
        // V = {</s>, <unk>, a, b}; 4 tokens observed.
        assert!((m.probability(&["b"], "a") - 3.0 / 8.0).abs() < 1e-15);
        assert!((m.probability(&[], "a") - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_words_share_one_slot() {
        let m = NGramModel::train(&["a b"], 2, 0.5).unwrap();
        assert_eq!(m.probability(&["a"], "zebra"), m.probability(&["a"], UNK));
        let r = m.score(&ScoreRequest::causal("", "zebra")).unwrap();
        assert_eq!(r.tokens, ["zebra", EOS]);
    }

    #[test]
    fn masked_mode_rejected() {
        let m = NGramModel::train(&["a b"], 2, 1.0).unwrap();
        let req = ScoreRequest {
            mode: ScoreMode::MaskedPll,
            ..ScoreRequest::causal("", "a")
        };
        assert!(matches!(m.score(&req), Err(ScoreError::UnsupportedMode { .. })));
    }

    #[test]
    fn save_load_round_trip() {
        let m = NGramModel::train(&["the dog ran.", "a cat sat. the end"], 3, 0.3).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = NGramModel::load(&buf[..]).unwrap();
        assert_eq!(back.identity(), m.identity());
        let req = ScoreRequest::causal("The dog ran.", "A cat sat.");
        assert_eq!(back.score(&req).unwrap(), m.score(&req).unwrap());
    }
}
