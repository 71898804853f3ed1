//! Sentence-level n-gram overlap score (orders 1 to 4, geometric mean,
//! brevity penalty, add-one smoothing for orders ≥ 2).

use std::collections::HashMap;

use super::SemanticMatcher;
use crate::error::ProviderError;

pub const MAX_ORDER: usize = 4;

/// Lowercase, put spaces around punctuation, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_ascii_punctuation() || (!ch.is_alphanumeric() && !ch.is_whitespace()) {
            spaced.push(' ');
            spaced.push(ch);
            spaced.push(' ');
        } else {
            spaced.push(ch);
        }
    }
    spaced.split_whitespace().map(str::to_owned).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped matches and candidate n-gram total for one order.
fn matches(reference: &[String], candidate: &[String], n: usize) -> (usize, usize) {
    let r = ngram_counts(reference, n);
    let c = ngram_counts(candidate, n);
    let total = candidate.len().saturating_sub(n - 1);
    let hit = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    (hit, total)
}

/// Score of `candidate` against `reference` on pre-tokenized input.
///
/// Orders for which the candidate has no n-grams contribute a precision of
/// one; short candidates are handled by the brevity penalty instead.
pub fn sentence_score(reference: &[String], candidate: &[String]) -> f64 {
    let c = candidate.len();
    if c == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let (hit, total) = matches(reference, candidate, n);
        let p = if total == 0 {
            1.0
        } else if n == 1 {
            if hit == 0 {
                return 0.0;
            }
            hit as f64 / total as f64
        } else {
            (hit + 1) as f64 / (total + 1) as f64
        };
        log_sum += p.ln() / MAX_ORDER as f64;
    }
    let r = reference.len();
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * log_sum.exp()
}

pub fn ngram_score(reference: &str, candidate: &str) -> f64 {
    sentence_score(&tokenize(reference), &tokenize(candidate))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NgramMatcher;

impl SemanticMatcher for NgramMatcher {
    fn id(&self) -> String {
        "ngram-bleu4-add1".into()
    }

    fn range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn score(&self, gold: &str, pred: &str) -> Result<f64, ProviderError> {
        Ok(ngram_score(gold, pred))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_value() {
        let s = ngram_score("the cat sat on the mat", "the cat sat on a mat");
        assert!((s - 0.6389431042462724).abs() < 1e-12, "{s}");
    }

    #[test]
    fn identity_and_extremes() {
        for t in ["London theatre is a theatre in London", "x", "a b", "Covid-19 outbreak."] {
            assert!((ngram_score(t, t) - 1.0).abs() < 1e-12, "{t}");
        }
        assert_eq!(ngram_score("a b c", "x y z"), 0.0);
        assert_eq!(ngram_score("a b c", ""), 0.0);
    }

    #[test]
    fn brevity_penalty_applies() {
        let full = ngram_score("a b c d e f", "a b c d e f");
        let short = ngram_score("a b c d e f", "a b c");
        assert!(short < full);
        assert!((short - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn tokenization() {
        assert_eq!(tokenize("Covid-19 outbreak, NOW."), vec!["covid", "-", "19", "outbreak", ",", "now", "."]);
    }
}
