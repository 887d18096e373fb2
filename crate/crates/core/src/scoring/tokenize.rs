use super::ngram::EOS;

/// Lowercase, split on whitespace, and turn a word-final period into a
/// separate end-of-sentence token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split_whitespace() {
        let lower = piece.to_lowercase();
        match lower.strip_suffix('.') {
            Some(stem) => {
                let stem = stem.trim_end_matches('.');
                if !stem.is_empty() {
                    out.push(stem.to_string());
                }
                out.push(EOS.to_string());
            }
            None => out.push(lower),
        }
    }
    out
}

/// Tokens of a scored target or training line: non-empty text always ends
/// in EOS.
pub fn tokenize_target(text: &str) -> Vec<String> {
    let mut out = tokenize(text);
    if !out.is_empty() && out.last().map(String::as_str) != Some(EOS) {
        out.push(EOS.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periods_become_eos() {
        assert_eq!(
            tokenize("The Boy ran. A dog sat."),
            ["the", "boy", "ran", EOS, "a", "dog", "sat", EOS]
        );
        assert_eq!(tokenize("  "), Vec::<String>::new());
        assert_eq!(tokenize_target("a b"), ["a", "b", EOS]);
        assert_eq!(tokenize_target("a b."), ["a", "b", EOS]);
        assert!(tokenize_target("").is_empty());
    }
}
