//! Open-ended answer metrics: BLEU-n and embedding similarity.

use std::collections::HashMap;

use crate::error::Result;
use crate::rewards::{semantic_reward, SimilarityProvider};

/// Lowercase and split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and the candidate n-gram total.
pub fn modified_precision(pred: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(pred, n);
    let refs = ngram_counts(reference, n);
    let matched = cand.iter().map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0))).sum();
    let total = pred.len().saturating_sub(n - 1);
    (matched, total)
}

/// Cumulative BLEU-n with uniform weights and brevity penalty.
///
/// Orders with no candidate n-grams (a prediction shorter than `n`) drop out
/// of the geometric mean; any order with zero matches gives 0.
pub fn bleu_n(pred: &str, reference: &str, n: usize) -> f64 {
    assert!(n >= 1, "BLEU order must be positive");
    let p = tokenize(pred);
    let r = tokenize(reference);
    if p.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for k in 1..=n {
        let (matched, total) = modified_precision(&p, &r, k);
        if total == 0 {
            continue;
        }
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
        orders += 1;
    }
    let bp = (1.0 - r.len() as f64 / p.len() as f64).min(0.0).exp();
    bp * (log_sum / orders as f64).exp()
}

/// Same computation as the semantic reward.
pub fn similarity_score(pred: &str, reference: &str, provider: &dyn SimilarityProvider) -> Result<f64> {
    semantic_reward(pred, reference, provider)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bleu_anchors() {
        assert_eq!(bleu_n("the cat sat", "the cat sat", 1), 1.0);
        assert_eq!(bleu_n("the cat sat", "the cat sat", 2), 1.0);
        assert!((bleu_n("the cat", "the dog", 1) - 0.5).abs() < 1e-12);
        assert_eq!(bleu_n("the cat", "the dog", 2), 0.0);
        assert_eq!(bleu_n("", "the dog", 1), 0.0);
        assert!(bleu_n("yes", "Yes, the chair is on the left side of the table", 1) < 0.2);
    }

    #[test]
    fn clipping_by_reference_counts() {
        // candidate repeats "the" four times; reference has it twice
        let b = bleu_n("the the the the", "the cat the mat", 1);
        assert!((b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_prediction_keeps_unigram_order() {
        assert_eq!(bleu_n("cat", "cat", 2), 1.0);
    }

    proptest! {
        #[test]
        fn bleu_self_is_one(words in prop::collection::vec("[a-z]{1,6}", 1..12)) {
            let s = words.join(" ");
            prop_assert!((bleu_n(&s, &s, 1) - 1.0).abs() < 1e-12);
            prop_assert!((bleu_n(&s, &s, 2) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn bleu_in_unit_interval(a in "\\PC{0,40}", b in "\\PC{0,40}") {
            let v = bleu_n(&a, &b, 2);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}
