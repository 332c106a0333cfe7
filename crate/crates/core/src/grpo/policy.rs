//! Softmax policies over the three-slot action space.
//!
//! Logit of token `j` at a slot is `sum_k theta[j*K + k] * phi_k(ctx)`, where
//! `phi` is either a one-hot context key (tabular) or a small hand-built
//! feature vector (linear). Tokens outside the slot, and answer tokens past
//! the query's candidate count, are masked out.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::{ActionSpace, QueryContext, SLOTS};
use crate::error::{Error, Result};
use crate::format::parse_structured_output;
use crate::synthenv::Direction;
use crate::types::{AnswerType, Rollout};

/// Autoregressive policy over token ids.
pub trait Policy: Send + Sync {
    fn space(&self) -> &ActionSpace;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Log-probabilities over the whole vocabulary at `position`; masked
    /// tokens are `-inf`.
    fn step_logprobs(&self, ctx: &QueryContext, position: usize) -> Vec<f64>;

    /// `out += sum_t weights[t] * grad log pi(tokens[t] | ctx, prefix)`.
    fn accumulate_grad(&self, ctx: &QueryContext, tokens: &[usize], weights: &[f64], out: &mut [f64]);

    fn token_logprobs(&self, ctx: &QueryContext, tokens: &[usize]) -> Vec<f64> {
        tokens.iter().enumerate().map(|(t, &tok)| self.step_logprobs(ctx, t)[tok]).collect()
    }

    fn sample(&self, ctx: &QueryContext, max_tokens: usize, rng: &mut dyn rand::RngCore) -> Rollout {
        let mut tokens = Vec::new();
        let mut logprobs = Vec::new();
        for t in 0..max_tokens.min(SLOTS) {
            let lp = self.step_logprobs(ctx, t);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = None;
            let mut last = 0;
            for (j, l) in lp.iter().enumerate() {
                if *l == f64::NEG_INFINITY {
                    continue;
                }
                last = j;
                acc += l.exp();
                if u < acc {
                    pick = Some(j);
                    break;
                }
            }
            let j = pick.unwrap_or(last);
            tokens.push(j);
            logprobs.push(lp[j]);
        }
        self.finish(ctx, tokens, logprobs)
    }

    fn greedy(&self, ctx: &QueryContext, max_tokens: usize) -> Rollout {
        let mut tokens = Vec::new();
        let mut logprobs = Vec::new();
        for t in 0..max_tokens.min(SLOTS) {
            let lp = self.step_logprobs(ctx, t);
            let mut best = 0;
            for j in 0..lp.len() {
                if lp[j] > lp[best] {
                    best = j;
                }
            }
            tokens.push(best);
            logprobs.push(lp[best]);
        }
        self.finish(ctx, tokens, logprobs)
    }

    fn finish(&self, ctx: &QueryContext, tokens: Vec<usize>, logprobs_old: Vec<f64>) -> Rollout {
        let text = self.space().render(ctx, &tokens);
        let parsed = parse_structured_output(&text);
        Rollout { tokens, text, logprobs_old, parsed }
    }

    /// Probability mass on the correct answer token.
    fn answer_probability(&self, ctx: &QueryContext) -> f64 {
        let lp = self.step_logprobs(ctx, 2);
        lp[self.space().slot_range(2).start + ctx.correct].exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Tabular,
    LinearFeature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub space: ActionSpace,
}

impl PolicySpec {
    pub fn n_features(&self) -> usize {
        let d = self.space.distance_grid.len();
        let m = self.space.max_objects;
        match self.kind {
            PolicyKind::Tabular => 9 + d + m,
            PolicyKind::LinearFeature => LIN_RANK + m + self.space.label_vocabulary.len(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.space.vocab_size() * self.n_features()
    }
}

const LIN_RANK: usize = 13;

fn template_index(t: AnswerType) -> usize {
    match t {
        AnswerType::Bbox => 0,
        AnswerType::YesNo => 1,
        AnswerType::Distance => 2,
        AnswerType::FreeForm => 3,
    }
}

/// Sparse feature vector of a context.
pub fn features(spec: &PolicySpec, ctx: &QueryContext) -> Vec<(usize, f64)> {
    let f = &ctx.features;
    let d = spec.space.distance_grid.len();
    let dx = (f.dx_sign + 1) as usize;
    match spec.kind {
        PolicyKind::Tabular => {
            let key = match f.template {
                AnswerType::YesNo => {
                    let asked = usize::from(f.asked == Some(Direction::Right));
                    asked * 3 + dx
                }
                AnswerType::FreeForm => 6 + dx,
                AnswerType::Distance => 9 + f.distance_bucket.unwrap_or(0),
                AnswerType::Bbox => 9 + d + f.bbox_rank.unwrap_or(0),
            };
            vec![(key, 1.0)]
        }
        PolicyKind::LinearFeature => {
            let mut phi = vec![(0, 1.0), (1 + template_index(f.template), 1.0)];
            match f.template {
                AnswerType::YesNo => {
                    let want = match f.asked {
                        Some(Direction::Left) => -1,
                        _ => 1,
                    };
                    if f.dx_sign == 0 {
                        phi.push((6, 1.0));
                    } else {
                        phi.push((5, if f.dx_sign == want { 1.0 } else { -1.0 }));
                    }
                }
                AnswerType::FreeForm => {
                    if f.dx_sign == 0 {
                        phi.push((8, 1.0));
                    } else {
                        phi.push((7, f.dx_sign as f64));
                    }
                }
                AnswerType::Distance => {
                    let ld = f.distance_m.unwrap_or(1.0).max(1e-3).ln();
                    phi.push((10, ld));
                    phi.push((11, ld * ld));
                }
                AnswerType::Bbox => {
                    phi.push((LIN_RANK + f.bbox_rank.unwrap_or(0), 1.0));
                }
            }
            phi.push((9, f.center_distance));
            if let Some(l) = f.label_index {
                phi.push((LIN_RANK + spec.space.max_objects + l, 1.0));
            }
            phi.retain(|(_, v)| *v != 0.0);
            phi
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxPolicy {
    pub spec: PolicySpec,
    pub theta: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn zeros(spec: PolicySpec) -> Self {
        let n = spec.n_params();
        SoftmaxPolicy { spec, theta: vec![0.0; n] }
    }

    /// Parameters uniform in `[-scale, scale]`.
    pub fn random<R: Rng>(spec: PolicySpec, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(spec);
        if scale > 0.0 {
            p.theta.iter_mut().for_each(|t| *t = rng.gen_range(-scale..=scale));
        }
        p
    }

    pub fn from_params(spec: PolicySpec, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != spec.n_params() {
            return Err(Error::LengthMismatch { left: theta.len(), right: spec.n_params() });
        }
        Ok(SoftmaxPolicy { spec, theta })
    }

    fn valid_range(&self, ctx: &QueryContext, position: usize) -> std::ops::Range<usize> {
        let r = self.spec.space.slot_range(position);
        if position >= 2 {
            r.start..r.start + ctx.candidates.len()
        } else {
            r
        }
    }

    /// Logits of the valid tokens at `position`, in range order.
    fn logits(&self, phi: &[(usize, f64)], range: std::ops::Range<usize>) -> Vec<f64> {
        let k = self.spec.n_features();
        range.map(|j| phi.iter().map(|(i, v)| self.theta[j * k + i] * v).sum()).collect()
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

impl Policy for SoftmaxPolicy {
    fn space(&self) -> &ActionSpace {
        &self.spec.space
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn step_logprobs(&self, ctx: &QueryContext, position: usize) -> Vec<f64> {
        let phi = features(&self.spec, ctx);
        let range = self.valid_range(ctx, position);
        let mut out = vec![f64::NEG_INFINITY; self.spec.space.vocab_size()];
        for (j, lp) in range.clone().zip(log_softmax(&self.logits(&phi, range))) {
            out[j] = lp;
        }
        out
    }

    fn accumulate_grad(&self, ctx: &QueryContext, tokens: &[usize], weights: &[f64], out: &mut [f64]) {
        let phi = features(&self.spec, ctx);
        let k = self.spec.n_features();
        for (t, (&tok, &w)) in tokens.iter().zip(weights).enumerate() {
            if w == 0.0 {
                continue;
            }
            let range = self.valid_range(ctx, t);
            let lp = log_softmax(&self.logits(&phi, range.clone()));
            for (j, l) in range.zip(lp) {
                let g = w * (f64::from(u8::from(j == tok)) - l.exp());
                for (i, v) in &phi {
                    out[j * k + i] += g * v;
                }
            }
        }
    }
}
