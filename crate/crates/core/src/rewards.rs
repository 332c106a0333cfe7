//! Format and semantic rewards, their weighted combination, and the
//! cross-view consistency correction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{answer_region, parse_structured_output};
use crate::types::{RewardVector, Rollout, TrainConfig};

/// Text embedder behind the semantic reward.
pub trait SimilarityProvider: Send + Sync {
    fn provider_id(&self) -> &str;

    /// Unit-norm embedding of `text`.
    fn embed(&self, text: &str) -> Result<Arc<Vec<f64>>>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Arc<Vec<f64>>>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Memoizes another provider by exact text.
pub struct CachedProvider<P> {
    inner: P,
    cache: Mutex<HashMap<String, Arc<Vec<f64>>>>,
}

impl<P: SimilarityProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        CachedProvider { inner, cache: Mutex::new(HashMap::new()) }
    }

    pub fn len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<P: SimilarityProvider> SimilarityProvider for CachedProvider<P> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn embed(&self, text: &str) -> Result<Arc<Vec<f64>>> {
        if let Some(v) = self.cache.lock().unwrap().get(text) {
            return Ok(v.clone());
        }
        // computed outside the lock; a racing duplicate is harmless
        let v = self.inner.embed(text)?;
        self.cache.lock().unwrap().insert(text.to_string(), v.clone());
        Ok(v)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Arc<Vec<f64>>>> {
        let missing: Vec<&str> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            texts.iter().copied().filter(|t| !cache.contains_key(*t) && seen.insert(*t)).collect()
        };
        if !missing.is_empty() {
            let vecs = self.inner.embed_batch(&missing)?;
            let mut cache = self.cache.lock().unwrap();
            for (t, v) in missing.iter().zip(vecs) {
                cache.insert(t.to_string(), v);
            }
        }
        let cache = self.cache.lock().unwrap();
        Ok(texts.iter().map(|t| cache[*t].clone()).collect())
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na * nb))
}

pub fn format_reward(rollout: &Rollout) -> f64 {
    format_reward_text(&rollout.text)
}

pub fn format_reward_text(text: &str) -> f64 {
    if parse_structured_output(text).is_some() {
        1.0
    } else {
        0.0
    }
}

/// Cosine similarity of the two answers, clamped to `[0, 1]`.
pub fn semantic_reward(pred_answer: &str, ref_answer: &str, provider: &dyn SimilarityProvider) -> Result<f64> {
    if pred_answer == ref_answer {
        return Ok(1.0);
    }
    let v = provider.embed_batch(&[pred_answer, ref_answer])?;
    Ok(cosine(&v[0], &v[1])?.clamp(0.0, 1.0))
}

/// Semantic reward of a rollout: its answer field when well-formed, the raw
/// text otherwise.
pub fn rollout_semantic_reward(rollout_text: &str, ref_answer: &str, provider: &dyn SimilarityProvider) -> Result<f64> {
    semantic_reward(&answer_region(rollout_text), ref_answer, provider)
}

pub fn combine_reward(r_f: f64, r_s: f64, config: &TrainConfig) -> f64 {
    config.lambda1 * r_f + config.lambda2 * r_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRewardSummary {
    pub avg_semantic_original: f64,
    pub avg_semantic_flipped: f64,
    pub delta: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn semantic_delta(original: &[f64], flipped: &[f64]) -> Result<GroupRewardSummary> {
    if original.len() != flipped.len() {
        return Err(Error::LengthMismatch { left: original.len(), right: flipped.len() });
    }
    if original.is_empty() {
        return Err(Error::InvalidData("semantic_delta needs nonempty groups".into()));
    }
    let a = mean(original);
    let b = mean(flipped);
    Ok(GroupRewardSummary { avg_semantic_original: a, avg_semantic_flipped: b, delta: a - b })
}

/// Penalize the stronger view: every above-threshold semantic reward in it
/// loses `eta·|delta|`. The other view is returned untouched.
pub fn apply_consistency_correction(
    original: &[f64],
    flipped: &[f64],
    summary: &GroupRewardSummary,
    config: &TrainConfig,
) -> (Vec<f64>, Vec<f64>) {
    let penalty = config.eta * summary.delta.abs();
    let correct = |xs: &[f64]| -> Vec<f64> {
        xs.iter().map(|&r| if r > config.delta { r - penalty } else { r }).collect()
    };
    if summary.delta >= 0.0 {
        (correct(original), flipped.to_vec())
    } else {
        (original.to_vec(), correct(flipped))
    }
}

/// Reward vectors for both views of one query plus the group summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRewards {
    pub original: Vec<RewardVector>,
    pub flipped: Vec<RewardVector>,
    pub summary: GroupRewardSummary,
}

fn assemble(r_f: &[f64], raw: &[f64], corrected: &[f64], config: &TrainConfig) -> Vec<RewardVector> {
    r_f.iter()
        .zip(raw)
        .zip(corrected)
        .map(|((&f, &s_raw), &s)| RewardVector {
            r_format: f,
            r_semantic_raw: s_raw,
            r_semantic: s,
            r_total: combine_reward(f, s, config),
        })
        .collect()
}

/// Score two groups of rollout texts end to end.
pub fn score_pair(
    original_texts: &[&str],
    original_ref: &str,
    flipped_texts: &[&str],
    flipped_ref: &str,
    provider: &dyn SimilarityProvider,
    config: &TrainConfig,
) -> Result<PairRewards> {
    let score = |texts: &[&str], reference: &str| -> Result<(Vec<f64>, Vec<f64>)> {
        let f = texts.iter().map(|t| format_reward_text(t)).collect();
        let s = texts
            .iter()
            .map(|t| rollout_semantic_reward(t, reference, provider))
            .collect::<Result<Vec<_>>>()?;
        Ok((f, s))
    };
    let (f_o, s_o) = score(original_texts, original_ref)?;
    let (f_f, s_f) = score(flipped_texts, flipped_ref)?;
    let summary = semantic_delta(&s_o, &s_f)?;
    let (c_o, c_f) = apply_consistency_correction(&s_o, &s_f, &summary, config);
    Ok(PairRewards {
        original: assemble(&f_o, &s_o, &c_o, config),
        flipped: assemble(&f_f, &s_f, &c_f, config),
        summary,
    })
}
