//! Bit-exact trainer checkpoints.
//!
//! Parameters are stored as the raw `u64` bit patterns of the floats so a
//! JSON round trip cannot perturb them.

use serde::{Deserialize, Serialize};

use super::policy::{PolicySpec, SoftmaxPolicy};
use super::trainer::Trainer;
use crate::error::{Error, Result};
use crate::types::TrainConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub n_params: usize,
    pub bits: Vec<u64>,
}

impl PolicyParams {
    pub fn from_values(v: &[f64]) -> Self {
        PolicyParams { n_params: v.len(), bits: v.iter().map(|x| x.to_bits()).collect() }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.bits.len() != self.n_params {
            return Err(Error::LengthMismatch { left: self.bits.len(), right: self.n_params });
        }
        let v: Vec<f64> = self.bits.iter().map(|b| f64::from_bits(*b)).collect();
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidData("checkpoint holds non-finite parameters".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub config_hash: String,
    pub spec: PolicySpec,
    pub config: TrainConfig,
    pub theta: PolicyParams,
    pub old: PolicyParams,
    pub reference: PolicyParams,
}

impl Checkpoint {
    pub fn capture(trainer: &Trainer, config_hash: &str) -> Self {
        Checkpoint {
            step: trainer.step,
            config_hash: config_hash.to_string(),
            spec: trainer.policy.spec.clone(),
            config: trainer.config.clone(),
            theta: PolicyParams::from_values(&trainer.policy.theta),
            old: PolicyParams::from_values(&trainer.old.theta),
            reference: PolicyParams::from_values(&trainer.reference.theta),
        }
    }

    pub fn restore(&self) -> Result<Trainer> {
        let p = |x: &PolicyParams| SoftmaxPolicy::from_params(self.spec.clone(), x.values()?);
        let mut t = Trainer::new(p(&self.theta)?, self.config.clone())?;
        t.old = p(&self.old)?;
        t.reference = p(&self.reference)?;
        t.step = self.step;
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
