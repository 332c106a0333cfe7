//! Run configuration: one JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spatial_grpo::grpo::{ActionSpace, PolicyKind, PolicySpec};
use spatial_grpo::services::ServiceConfig;
use spatial_grpo::synthenv::EnvConfig;
use spatial_grpo::{Error, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Initial parameters are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub distance_grid: Vec<f64>,
    pub reasonings: Vec<String>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let space = ActionSpace::default();
        PolicyConfig {
            kind: PolicyKind::LinearFeature,
            init_scale: 0.1,
            distance_grid: space.distance_grid,
            reasonings: space.reasonings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServicesConfig {
    /// Use the deterministic in-process stand-ins instead of HTTP.
    pub mock: bool,
    pub embed: ServiceConfig,
    pub judge: ServiceConfig,
    pub rewrite: ServiceConfig,
}

impl Default for ServicesConfig {
    fn default() -> Self {
        ServicesConfig {
            mock: true,
            embed: ServiceConfig::default(),
            judge: ServiceConfig::default(),
            rewrite: ServiceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig { data_dir: "data".into(), out_dir: "out".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteMode {
    RuleBased,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub policy: PolicyConfig,
    pub services: ServicesConfig,
    pub paths: PathsConfig,
    /// Items written by gen-data.
    pub count: usize,
    /// Optimizer steps run by train.
    pub steps: usize,
    /// Fraction of pairs held out of training and used for predictions.
    pub holdout_fraction: f64,
    pub rewrite_mode: RewriteMode,
    /// Steps between intermediate checkpoints; 0 disables them.
    pub checkpoint_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: EnvConfig::default(),
            train: TrainConfig { max_tokens: spatial_grpo::grpo::SLOTS, ..TrainConfig::default() },
            policy: PolicyConfig::default(),
            services: ServicesConfig::default(),
            paths: PathsConfig::default(),
            count: 2000,
            steps: 200,
            holdout_fraction: 0.1,
            rewrite_mode: RewriteMode::RuleBased,
            checkpoint_every: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let cfg = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.env.validate()?;
        self.train.validate()?;
        self.action_space().validate()?;
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config("holdout_fraction must lie in [0, 1)".into()));
        }
        if !(self.policy.init_scale >= 0.0) {
            return Err(Error::Config("policy.init_scale must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn action_space(&self) -> ActionSpace {
        ActionSpace {
            formats: ActionSpace::default().formats,
            reasonings: self.policy.reasonings.clone(),
            distance_grid: self.policy.distance_grid.clone(),
            max_objects: self.env.n_objects_range.1,
            label_vocabulary: self.env.label_vocabulary.clone(),
        }
    }

    pub fn policy_spec(&self) -> PolicySpec {
        PolicySpec { kind: self.policy.kind, space: self.action_space() }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
