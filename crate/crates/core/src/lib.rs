//! Mirror-consistent spatial QA, view-consistent rewards, and group-relative
//! policy optimization over toy policies.
//!
//! The modules build on each other bottom-up: [`types`] and [`format`] are the
//! shared vocabulary, [`synthenv`] produces scenes with an exact oracle,
//! [`mirror`] flips them, [`rewards`] scores rollouts, [`grpo`] optimizes, and
//! [`metrics`] evaluates. [`services`] holds the HTTP clients and their
//! offline mocks.

pub mod error;
pub mod format;
pub mod grpo;
pub mod jsonl;
pub mod metrics;
pub mod mirror;
pub mod rewards;
pub mod services;
pub mod synthenv;
pub mod types;

pub use error::{Error, Result};
pub use format::{answer_region, parse_structured_output, render_structured_output};
pub use types::*;
