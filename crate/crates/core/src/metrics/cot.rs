//! Reasoning-word statistics over model outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::keywords::{count_phrases, KeywordRuleSet};

/// Mean reasoning words per response reported for the reference model.
pub const REFERENCE_MEAN: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotStats {
    pub responses: usize,
    pub total: usize,
    pub mean: Option<f64>,
    /// keyword count → number of responses with that count
    pub histogram: BTreeMap<usize, usize>,
    pub reference_mean: f64,
}

pub fn cot_keyword_stats<S: AsRef<str>>(outputs: &[S], rules: &KeywordRuleSet) -> CotStats {
    let mut histogram = BTreeMap::new();
    let mut total = 0;
    for out in outputs {
        let c = count_phrases(out.as_ref(), &rules.cot_keywords);
        total += c;
        *histogram.entry(c).or_insert(0) += 1;
    }
    CotStats {
        responses: outputs.len(),
        total,
        mean: (!outputs.is_empty()).then(|| total as f64 / outputs.len() as f64),
        histogram,
        reference_mean: REFERENCE_MEAN,
    }
}
