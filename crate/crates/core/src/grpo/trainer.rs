//! Training loop over paired original/mirrored queries.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{ActionSpace, FormatKind, QueryContext};
use super::objective::{objective_gradient, sample_group, ObjectiveValue, ScoredGroup, ScoredPair};
use super::policy::{Policy, SoftmaxPolicy};
use crate::error::{Error, Result};
use crate::format::answer_region;
use crate::mirror::flip_scene;
use crate::rewards::{score_pair, SimilarityProvider};
use crate::types::{QAItem, SpatialScene, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedQuery {
    pub original: QueryContext,
    pub flipped: QueryContext,
}

/// Join originals with their mirrored items (via `paired_qa_id`) and build
/// both contexts. Mirrored scenes missing from `scenes` are derived by
/// flipping the original scene.
pub fn build_pairs(
    originals: &[QAItem],
    mirrored: &[QAItem],
    scenes: &[SpatialScene],
    space: &ActionSpace,
    meters_per_pixel: f64,
) -> Result<Vec<PairedQuery>> {
    let by_scene: HashMap<&str, &SpatialScene> = scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    let by_source: HashMap<&str, &QAItem> = mirrored
        .iter()
        .filter_map(|m| m.paired_qa_id.as_deref().map(|p| (p, m)))
        .collect();
    let mut out = Vec::with_capacity(originals.len());
    for qa in originals {
        let scene = by_scene
            .get(qa.scene_id.as_str())
            .ok_or_else(|| Error::InvalidData(format!("qa {}: unknown scene {}", qa.qa_id, qa.scene_id)))?;
        let m = by_source
            .get(qa.qa_id.as_str())
            .ok_or_else(|| Error::InvalidData(format!("qa {}: no mirrored counterpart", qa.qa_id)))?;
        let flipped_scene = match by_scene.get(m.scene_id.as_str()) {
            Some(s) => (*s).clone(),
            None => flip_scene(scene),
        };
        out.push(PairedQuery {
            original: QueryContext::new(qa, scene, space, meters_per_pixel)?,
            flipped: QueryContext::new(m, &flipped_scene, space, meters_per_pixel)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub mean_reward_original: f64,
    pub mean_reward_flipped: f64,
    pub mean_semantic_original: f64,
    pub mean_semantic_flipped: f64,
    /// Batch mean of the semantic difference between views.
    pub delta: f64,
    pub mean_advantage: f64,
    pub surrogate: f64,
    pub kl: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub clipped_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
}

impl StepReport {
    fn is_finite(&self) -> bool {
        [
            self.mean_reward_original,
            self.mean_reward_flipped,
            self.mean_semantic_original,
            self.mean_semantic_flipped,
            self.delta,
            self.mean_advantage,
            self.surrogate,
            self.kl,
            self.objective,
            self.grad_norm,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trainer {
    pub policy: SoftmaxPolicy,
    pub old: SoftmaxPolicy,
    pub reference: SoftmaxPolicy,
    pub config: TrainConfig,
    /// Number of completed steps.
    pub step: usize,
}

impl Trainer {
    pub fn new(policy: SoftmaxPolicy, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Trainer { old: policy.clone(), reference: policy.clone(), policy, config, step: 0 })
    }

    fn step_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(self.step as u64 + 1);
        rng
    }

    pub fn train_step(&mut self, data: &[PairedQuery], provider: &dyn SimilarityProvider) -> Result<StepReport> {
        if data.is_empty() {
            return Err(Error::InvalidData("training set is empty".into()));
        }
        let cfg = &self.config;
        if self.step % cfg.old_refresh_interval.max(1) == 0 {
            self.old = self.policy.clone();
        }
        let mut rng = self.step_rng();
        let batch: Vec<usize> = if cfg.batch_size >= data.len() {
            (0..data.len()).collect()
        } else {
            let mut idx = rand::seq::index::sample(&mut rng, data.len(), cfg.batch_size).into_vec();
            idx.sort_unstable();
            idx
        };

        let mut pairs = Vec::with_capacity(batch.len());
        let (mut ro, mut rf, mut so, mut sf, mut delta) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &i in &batch {
            let q = &data[i];
            let go = sample_group(&self.old, &q.original, cfg, &mut rng);
            let gf = sample_group(&self.old, &q.flipped, cfg, &mut rng);
            let to: Vec<&str> = go.rollouts.iter().map(|r| r.text.as_str()).collect();
            let tf: Vec<&str> = gf.rollouts.iter().map(|r| r.text.as_str()).collect();
            let scored =
                score_pair(&to, &q.original.reference_answer, &tf, &q.flipped.reference_answer, provider, cfg)?;
            let g = cfg.group_size as f64;
            ro += scored.original.iter().map(|r| r.r_total).sum::<f64>() / g;
            rf += scored.flipped.iter().map(|r| r.r_total).sum::<f64>() / g;
            so += scored.summary.avg_semantic_original;
            sf += scored.summary.avg_semantic_flipped;
            delta += scored.summary.delta;
            pairs.push(ScoredPair {
                original: ScoredGroup::new(&q.original, go, scored.original, cfg.advantage_std_floor),
                flipped: ScoredGroup::new(&q.flipped, gf, scored.flipped, cfg.advantage_std_floor),
                delta: scored.summary.delta,
            });
        }

        let mut first: Option<(ObjectiveValue, f64)> = None;
        let mut updated = self.policy.clone();
        for _ in 0..cfg.inner_epochs.max(1) {
            let (value, grad) = objective_gradient(&pairs, &updated, &self.reference, cfg);
            if !grad.iter().all(|g| g.is_finite()) || !value.objective.is_finite() {
                return Err(Error::NonFiniteGradient { step: self.step });
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            first.get_or_insert((value, norm));
            for (p, g) in updated.params_mut().iter_mut().zip(&grad) {
                *p += cfg.learning_rate * g;
            }
        }
        if !updated.theta.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFiniteGradient { step: self.step });
        }
        let (value, grad_norm) = first.expect("at least one epoch");
        let n = batch.len() as f64;
        let report = StepReport {
            step: self.step,
            mean_reward_original: ro / n,
            mean_reward_flipped: rf / n,
            mean_semantic_original: so / n,
            mean_semantic_flipped: sf / n,
            delta: delta / n,
            mean_advantage: value.mean_advantage,
            surrogate: value.surrogate,
            kl: value.kl,
            objective: value.objective,
            grad_norm,
            clipped_fraction: value.clipped_fraction,
            checkpoint: None,
        };
        if !report.is_finite() {
            return Err(Error::NonFiniteGradient { step: self.step });
        }
        self.policy = updated;
        self.step += 1;
        Ok(report)
    }
}

/// True when the greedy output's answer region is the correct candidate.
pub fn greedy_correct(policy: &dyn Policy, ctx: &QueryContext, max_tokens: usize) -> bool {
    let r = policy.greedy(ctx, max_tokens);
    answer_region(&r.text).trim() == ctx.correct_answer()
}

pub fn greedy_accuracy(policy: &dyn Policy, ctxs: &[&QueryContext], max_tokens: usize) -> f64 {
    if ctxs.is_empty() {
        return 0.0;
    }
    ctxs.iter().filter(|c| greedy_correct(policy, c, max_tokens)).count() as f64 / ctxs.len() as f64
}

/// Mean probability mass on the correct answer token.
pub fn expected_accuracy(policy: &dyn Policy, ctxs: &[&QueryContext]) -> f64 {
    if ctxs.is_empty() {
        return 0.0;
    }
    ctxs.iter().map(|c| policy.answer_probability(c)).sum::<f64>() / ctxs.len() as f64
}

/// Supervised ascent on `log p(well-formed) + log p(correct answer)`.
pub fn warm_start(policy: &mut SoftmaxPolicy, ctxs: &[&QueryContext], steps: usize, learning_rate: f64) {
    if ctxs.is_empty() {
        return;
    }
    let space = policy.spec.space.clone();
    let fmt = space.formats.iter().position(|f| *f == FormatKind::WellFormed).unwrap_or(0);
    let w = 1.0 / ctxs.len() as f64;
    for _ in 0..steps {
        let mut g = vec![0.0; policy.theta.len()];
        for ctx in ctxs {
            let tokens = [fmt, space.slot_range(1).start, space.slot_range(2).start + ctx.correct];
            policy.accumulate_grad(ctx, &tokens, &[w, 0.0, w], &mut g);
        }
        for (p, d) in policy.theta.iter_mut().zip(&g) {
            *p += learning_rate * d;
        }
    }
}

/// True when no window mean falls more than `tolerance` below the previous one.
pub fn reward_window_monotone(rewards: &[f64], window: usize, tolerance: f64) -> bool {
    let means: Vec<f64> = rewards.chunks(window.max(1)).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    means.windows(2).all(|w| w[1] >= w[0] - tolerance)
}
