//! Group sampling, advantages, the clipped surrogate, the KL penalty and the
//! joint two-view objective with its analytic gradient.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::action::QueryContext;
use super::policy::Policy;
use crate::types::{RewardVector, RolloutGroup, TrainConfig};

pub fn sample_group(
    policy_old: &dyn Policy,
    ctx: &QueryContext,
    config: &TrainConfig,
    rng: &mut dyn RngCore,
) -> RolloutGroup {
    let rollouts = (0..config.group_size).map(|_| policy_old.sample(ctx, config.max_tokens, rng)).collect();
    RolloutGroup { qa_id: ctx.qa_id.clone(), rollouts }
}

/// `(r - mean) / max(std, floor)` with the population std.
pub fn compute_advantages(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    // An equal group carries no signal; the summed mean may be off by an
    // ulp, which the floor would otherwise blow up.
    if rewards.iter().all(|r| *r == rewards[0]) {
        return vec![0.0; rewards.len()];
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let scale = var.sqrt().max(std_floor);
    rewards.iter().map(|r| (r - mean) / scale).collect()
}

pub fn importance_ratio(policy_new: &dyn Policy, ctx: &QueryContext, rollout: &crate::types::Rollout) -> Vec<f64> {
    policy_new
        .token_logprobs(ctx, &rollout.tokens)
        .iter()
        .zip(&rollout.logprobs_old)
        .map(|(new, old)| (new - old).exp())
        .collect()
}

fn token_term(ratio: f64, advantage: f64, epsilon: f64) -> (f64, bool) {
    let plain = ratio * advantage;
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    if plain <= clipped {
        (plain, true)
    } else {
        (clipped, false)
    }
}

/// Token mean of `min(a*A, clip(a, 1-eps, 1+eps)*A)`; zero for an empty rollout.
pub fn clipped_surrogate(advantage: f64, ratios: &[f64], epsilon: f64) -> f64 {
    if ratios.is_empty() {
        return 0.0;
    }
    ratios.iter().map(|&a| token_term(a, advantage, epsilon).0).sum::<f64>() / ratios.len() as f64
}

/// Per-token `r - ln r - 1` with `r = pi_ref / pi_theta`, from log-probabilities.
pub fn kl_k3(logprob_new: f64, logprob_ref: f64) -> f64 {
    let log_r = logprob_ref - logprob_new;
    // exp_m1 keeps precision when the policies are close.
    log_r.exp_m1() - log_r
}

/// k3 estimate averaged over every sampled token of every given rollout.
pub fn kl_penalty(policy_new: &dyn Policy, policy_ref: &dyn Policy, items: &[(&QueryContext, &RolloutGroup)]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (ctx, group) in items {
        for r in &group.rollouts {
            let new = policy_new.token_logprobs(ctx, &r.tokens);
            let reference = policy_ref.token_logprobs(ctx, &r.tokens);
            for (a, b) in new.iter().zip(&reference) {
                sum += kl_k3(*a, *b);
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// One view's sampled group with its (already corrected) rewards.
#[derive(Debug, Clone)]
pub struct ScoredGroup<'a> {
    pub ctx: &'a QueryContext,
    pub group: RolloutGroup,
    pub rewards: Vec<RewardVector>,
    pub advantages: Vec<f64>,
}

impl<'a> ScoredGroup<'a> {
    pub fn new(ctx: &'a QueryContext, group: RolloutGroup, rewards: Vec<RewardVector>, std_floor: f64) -> Self {
        let totals: Vec<f64> = rewards.iter().map(|r| r.r_total).collect();
        let advantages = compute_advantages(&totals, std_floor);
        ScoredGroup { ctx, group, rewards, advantages }
    }
}

#[derive(Debug, Clone)]
pub struct ScoredPair<'a> {
    pub original: ScoredGroup<'a>,
    pub flipped: ScoredGroup<'a>,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveValue {
    /// Batch mean of `(1/2G) sum (R_i + R^_i)`.
    pub surrogate: f64,
    pub kl: f64,
    pub objective: f64,
    pub mean_advantage: f64,
    /// Fraction of tokens whose clipped branch was active.
    pub clipped_fraction: f64,
}

fn evaluate(
    pairs: &[ScoredPair<'_>],
    policy: &dyn Policy,
    reference: &dyn Policy,
    config: &TrainConfig,
    mut grad: Option<&mut [f64]>,
) -> ObjectiveValue {
    let mut out = ObjectiveValue::default();
    if pairs.is_empty() {
        return out;
    }
    let np = pairs.len() as f64;
    let mut tokens_total = 0usize;
    let mut clipped = 0usize;
    let mut adv_sum = 0.0;
    let mut adv_n = 0usize;
    for pair in pairs {
        let views = [&pair.original, &pair.flipped];
        let g_total = (pair.original.group.rollouts.len() + pair.flipped.group.rollouts.len()) as f64;
        let n_tok: usize = views.iter().flat_map(|v| &v.group.rollouts).map(|r| r.tokens.len()).sum();
        let mut surr = 0.0;
        let mut kl = 0.0;
        for v in views {
            for (r, &adv) in v.group.rollouts.iter().zip(&v.advantages) {
                adv_sum += adv;
                adv_n += 1;
                let lp = policy.token_logprobs(v.ctx, &r.tokens);
                let lp_ref = reference.token_logprobs(v.ctx, &r.tokens);
                let len = r.tokens.len().max(1) as f64;
                let mut weights = vec![0.0; r.tokens.len()];
                let mut surr_i = 0.0;
                for t in 0..r.tokens.len() {
                    let ratio = (lp[t] - r.logprobs_old[t]).exp();
                    let (term, unclipped) = token_term(ratio, adv, config.epsilon_clip);
                    surr_i += term;
                    tokens_total += 1;
                    if !unclipped {
                        clipped += 1;
                    }
                    kl += kl_k3(lp[t], lp_ref[t]);
                    if unclipped {
                        weights[t] += adv * ratio / (len * g_total * np);
                    }
                    if n_tok > 0 {
                        let rr = (lp_ref[t] - lp[t]).exp();
                        weights[t] -= config.beta * (1.0 - rr) / (n_tok as f64 * np);
                    }
                }
                surr += surr_i / len;
                if let Some(g) = grad.as_deref_mut() {
                    policy.accumulate_grad(v.ctx, &r.tokens, &weights, g);
                }
            }
        }
        let surr = surr / g_total;
        let kl = if n_tok > 0 { kl / n_tok as f64 } else { 0.0 };
        out.surrogate += surr / np;
        out.kl += kl / np;
    }
    out.objective = out.surrogate - config.beta * out.kl;
    out.mean_advantage = if adv_n > 0 { adv_sum / adv_n as f64 } else { 0.0 };
    out.clipped_fraction = if tokens_total > 0 { clipped as f64 / tokens_total as f64 } else { 0.0 };
    out
}

/// `J` averaged over the batch of query pairs.
pub fn spatial_grpo_objective(
    pairs: &[ScoredPair<'_>],
    policy: &dyn Policy,
    reference: &dyn Policy,
    config: &TrainConfig,
) -> ObjectiveValue {
    evaluate(pairs, policy, reference, config, None)
}

/// `J` and its gradient with respect to the policy parameters. The clipped
/// branch contributes no gradient; ties go to the unclipped branch.
pub fn objective_gradient(
    pairs: &[ScoredPair<'_>],
    policy: &dyn Policy,
    reference: &dyn Policy,
    config: &TrainConfig,
) -> (ObjectiveValue, Vec<f64>) {
    let mut g = vec![0.0; policy.params().len()];
    let v = evaluate(pairs, policy, reference, config, Some(&mut g));
    (v, g)
}
