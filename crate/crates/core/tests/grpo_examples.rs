//! Worked examples for the objective, its gradient, and the trainer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spatial_grpo::grpo::*;
use spatial_grpo::mirror::{rewrite_qa_rule_based, DirectionalLexicon};
use spatial_grpo::rewards::score_pair;
use spatial_grpo::services::mock::TrigramEmbedder;
use spatial_grpo::synthenv::{generate_dataset, EnvConfig};
use spatial_grpo::{QAItem, RewardVector, TrainConfig};

fn pairs(n: usize) -> Vec<PairedQuery> {
    let cfg = EnvConfig::default();
    let (scenes, items) = generate_dataset(&cfg, n).unwrap();
    let lex = DirectionalLexicon::default();
    let mirrored: Vec<QAItem> =
        items.iter().zip(&scenes).map(|(q, s)| rewrite_qa_rule_based(q, s.canvas_width, &lex)).collect();
    build_pairs(&items, &mirrored, &scenes, &ActionSpace::default(), cfg.meters_per_pixel).unwrap()
}

fn rewards(values: &[f64]) -> Vec<RewardVector> {
    values.iter().map(|&t| RewardVector { r_format: t, r_semantic_raw: t, r_semantic: t, r_total: t }).collect()
}

/// Two-way choice on the format slot with a single logit parameter.
struct Coin {
    space: ActionSpace,
    theta: Vec<f64>,
}

impl Policy for Coin {
    fn space(&self) -> &ActionSpace {
        &self.space
    }
    fn params(&self) -> &[f64] {
        &self.theta
    }
    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }
    fn step_logprobs(&self, _ctx: &QueryContext, _position: usize) -> Vec<f64> {
        let t = self.theta[0];
        let lse = t.max(0.0) + (1.0 + (-t.abs()).exp()).ln();
        let mut out = vec![f64::NEG_INFINITY; self.space.vocab_size()];
        out[0] = t - lse;
        out[1] = -lse;
        out
    }
    fn accumulate_grad(&self, _ctx: &QueryContext, tokens: &[usize], weights: &[f64], out: &mut [f64]) {
        let p = 1.0 / (1.0 + (-self.theta[0]).exp());
        for (&tok, &w) in tokens.iter().zip(weights) {
            out[0] += w * if tok == 0 { 1.0 - p } else { -p };
        }
    }
}

#[test]
fn single_parameter_fixture_matches_finite_differences() {
    let data = pairs(1);
    let ctx = &data[0].original;
    let cfg = TrainConfig { max_tokens: 1, group_size: 4, beta: 0.3, ..TrainConfig::default() };
    let old = Coin { space: ActionSpace::default(), theta: vec![0.2] };
    let reference = Coin { space: ActionSpace::default(), theta: vec![-0.5] };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = sample_group(&old, ctx, &cfg, &mut rng);
    let f = sample_group(&old, &data[0].flipped, &cfg, &mut rng);
    let pair = ScoredPair {
        original: ScoredGroup::new(ctx, g, rewards(&[1.0, 0.2, 0.6, 0.0]), 1e-8),
        flipped: ScoredGroup::new(&data[0].flipped, f, rewards(&[0.4, 0.9, 0.1, 0.5]), 1e-8),
        delta: 0.0,
    };
    // inside the trust region, then far outside it on both sides
    for theta in [0.25, 0.1, 1.4, -1.1, 3.0] {
        let mut p = Coin { space: ActionSpace::default(), theta: vec![theta] };
        let (_, grad) = objective_gradient(std::slice::from_ref(&pair), &p, &reference, &cfg);
        let h = 1e-6;
        p.theta[0] = theta + h;
        let up = spatial_grpo_objective(std::slice::from_ref(&pair), &p, &reference, &cfg).objective;
        p.theta[0] = theta - h;
        let down = spatial_grpo_objective(std::slice::from_ref(&pair), &p, &reference, &cfg).objective;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - grad[0]).abs() <= 1e-5 * grad[0].abs().max(1e-3), "theta {theta}: fd {fd}, analytic {}", grad[0]);
    }
}

#[test]
fn one_token_vocabulary_gives_identical_rollouts_and_no_update() {
    let space = ActionSpace {
        formats: vec![FormatKind::WellFormed],
        reasonings: vec!["Only one thought.".into()],
        ..ActionSpace::default()
    };
    let cfg = EnvConfig::default();
    let (scenes, items) = generate_dataset(&cfg, 6).unwrap();
    let lex = DirectionalLexicon::default();
    let mirrored: Vec<QAItem> =
        items.iter().zip(&scenes).map(|(q, s)| rewrite_qa_rule_based(q, s.canvas_width, &lex)).collect();
    let data = build_pairs(&items, &mirrored, &scenes, &space, cfg.meters_per_pixel).unwrap();
    let spec = PolicySpec { kind: PolicyKind::LinearFeature, space };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let policy = SoftmaxPolicy::random(spec, 0.5, &mut rng);
    // Two tokens cover exactly the two single-choice slots.
    let tc = TrainConfig { max_tokens: 2, ..TrainConfig::default() };
    let group = sample_group(&policy, &data[0].original, &tc, &mut rng);
    assert!(group.rollouts.windows(2).all(|w| w[0] == w[1]));
    assert!(group.rollouts.iter().all(|r| r.logprobs_old == [0.0, 0.0]));

    let before = policy.theta.clone();
    let mut t = Trainer::new(policy, tc).unwrap();
    let report = t.train_step(&data, &TrigramEmbedder::default()).unwrap();
    assert_eq!(report.grad_norm, 0.0);
    assert_eq!(report.kl, 0.0);
    assert_eq!(t.policy.theta, before);
}

/// Plain single-view GRPO, written out directly.
fn single_view(policy: &dyn Policy, reference: &dyn Policy, ctx: &QueryContext, g: &spatial_grpo::RolloutGroup, adv: &[f64], cfg: &TrainConfig) -> f64 {
    let mut surr = 0.0;
    let mut kl = 0.0;
    let mut n_tok = 0.0;
    for (r, &a) in g.rollouts.iter().zip(adv) {
        let lp = policy.token_logprobs(ctx, &r.tokens);
        let lr = reference.token_logprobs(ctx, &r.tokens);
        let mut s = 0.0;
        for t in 0..r.tokens.len() {
            let ratio = (lp[t] - r.logprobs_old[t]).exp();
            let clipped = ratio.max(1.0 - cfg.epsilon_clip).min(1.0 + cfg.epsilon_clip);
            s += (ratio * a).min(clipped * a);
            let q = (lr[t] - lp[t]).exp();
            kl += q - (lr[t] - lp[t]) - 1.0;
            n_tok += 1.0;
        }
        surr += s / r.tokens.len() as f64;
    }
    surr / g.rollouts.len() as f64 - cfg.beta * kl / n_tok
}

#[test]
fn zero_eta_identical_views_reduce_to_single_view() {
    let data = pairs(4);
    let cfg = TrainConfig { max_tokens: SLOTS, eta: 0.0, ..TrainConfig::default() };
    let spec = PolicySpec { kind: PolicyKind::Tabular, space: ActionSpace::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let old = SoftmaxPolicy::random(spec.clone(), 0.5, &mut rng);
    let reference = SoftmaxPolicy::random(spec.clone(), 0.5, &mut rng);
    let theta: Vec<f64> = old.theta.iter().map(|t| t * 1.3).collect();
    let policy = SoftmaxPolicy::from_params(spec, theta).unwrap();
    let embedder = TrigramEmbedder::default();
    for p in &data {
        let ctx = &p.original;
        let g = sample_group(&old, ctx, &cfg, &mut rng);
        let texts: Vec<&str> = g.rollouts.iter().map(|r| r.text.as_str()).collect();
        let scored = score_pair(&texts, &ctx.reference_answer, &texts, &ctx.reference_answer, &embedder, &cfg).unwrap();
        assert_eq!(scored.original, scored.flipped);
        let a = ScoredGroup::new(ctx, g.clone(), scored.original.clone(), cfg.advantage_std_floor);
        let b = ScoredGroup::new(ctx, g.clone(), scored.flipped.clone(), cfg.advantage_std_floor);
        let want = single_view(&policy, &reference, ctx, &g, &a.advantages, &cfg);
        let pair = ScoredPair { original: a, flipped: b, delta: scored.summary.delta };
        let got = spatial_grpo_objective(&[pair], &policy, &reference, &cfg).objective;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn on_policy_without_kl_is_reinforce() {
    // ratio = 1 everywhere, so clipping is inert and the gradient is the
    // advantage-weighted score function.
    let data = pairs(3);
    let cfg = TrainConfig { max_tokens: SLOTS, beta: 0.0, ..TrainConfig::default() };
    let spec = PolicySpec { kind: PolicyKind::LinearFeature, space: ActionSpace::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let policy = SoftmaxPolicy::random(spec, 0.3, &mut rng);
    let mut scored = Vec::new();
    for p in &data {
        let g = sample_group(&policy, &p.original, &cfg, &mut rng);
        let f = sample_group(&policy, &p.flipped, &cfg, &mut rng);
        let r: Vec<f64> = (0..cfg.group_size).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let rf: Vec<f64> = (0..cfg.group_size).map(|i| (i as f64 * 0.91).cos().abs()).collect();
        scored.push(ScoredPair {
            original: ScoredGroup::new(&p.original, g, rewards(&r), 1e-8),
            flipped: ScoredGroup::new(&p.flipped, f, rewards(&rf), 1e-8),
            delta: 0.0,
        });
    }
    let (v, grad) = objective_gradient(&scored, &policy, &policy, &cfg);
    assert_eq!(v.clipped_fraction, 0.0);
    let mut want = vec![0.0; grad.len()];
    let np = scored.len() as f64;
    for pair in &scored {
        let g_total = 2.0 * cfg.group_size as f64;
        for view in [&pair.original, &pair.flipped] {
            for (r, &a) in view.group.rollouts.iter().zip(&view.advantages) {
                let w = a / (r.tokens.len() as f64 * g_total * np);
                policy.accumulate_grad(view.ctx, &r.tokens, &vec![w; r.tokens.len()], &mut want);
            }
        }
    }
    for (x, y) in grad.iter().zip(&want) {
        assert!((x - y).abs() < 1e-12);
    }
}
