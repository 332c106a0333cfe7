//! Group-relative policy optimization over paired views with toy policies.

pub mod action;
pub mod checkpoint;
pub mod objective;
pub mod policy;
pub mod trainer;

pub use action::{ActionSpace, ContextFeatures, FormatKind, QueryContext, SLOTS};
pub use checkpoint::{Checkpoint, PolicyParams};
pub use objective::{
    clipped_surrogate, compute_advantages, importance_ratio, kl_k3, kl_penalty, objective_gradient, sample_group,
    spatial_grpo_objective, ObjectiveValue, ScoredGroup, ScoredPair,
};
pub use policy::{features, Policy, PolicyKind, PolicySpec, SoftmaxPolicy};
pub use trainer::{
    build_pairs, expected_accuracy, greedy_accuracy, greedy_correct, reward_window_monotone, warm_start,
    PairedQuery, StepReport, Trainer,
};
