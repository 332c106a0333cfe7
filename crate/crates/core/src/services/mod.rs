//! Clients for the embedding, judge, and rewrite services, with offline
//! mocks behind the same traits.

pub mod embed;
pub mod http;
pub mod judge;
pub mod mock;
pub mod rewrite;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::RemoteEmbedder;
pub use http::HttpClient;
pub use judge::{build_judge_prompt, parse_verdict, RemoteJudge, JUDGE_PROMPT};
pub use mock::{MockJudge, MockRewriter, TrigramEmbedder};
pub use rewrite::{build_rewrite_prompt, parse_rewrite_response, RemoteRewriter, REWRITE_PROMPT};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("service unavailable after {attempts} attempt(s): {message}")]
    Unavailable { attempts: usize, message: String },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("malformed verdict: {0:?}")]
    MalformedVerdict(String),
    #[error("malformed rewrite response: {raw:?}")]
    MalformedRewrite { raw: String },
}

impl ServiceError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ServiceError::Unavailable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub base_url: String,
    pub timeout_ms: u64,
    pub max_retries: usize,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Concurrent requests allowed per client.
    pub max_in_flight: usize,
    /// Raw responses are written here when set.
    pub archive_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            base_url: "http://127.0.0.1:8080".into(),
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_ms: 200,
            max_in_flight: 4,
            archive_dir: None,
        }
    }
}

impl ServiceConfig {
    pub fn with_base_url(base_url: impl Into<String>) -> Self {
        ServiceConfig { base_url: base_url.into(), ..ServiceConfig::default() }
    }

    /// Replace `base_url` with the value of `var` when it is set.
    pub fn with_env_override(mut self, var: &str) -> Self {
        if let Ok(url) = std::env::var(var) {
            if !url.trim().is_empty() {
                self.base_url = url;
            }
        }
        self
    }
}

pub const EMBED_URL_VAR: &str = "SVQA_EMBED_URL";
pub const JUDGE_URL_VAR: &str = "SVQA_JUDGE_URL";
pub const REWRITE_URL_VAR: &str = "SVQA_REWRITE_URL";

/// Decides whether a free-text yes/no prediction matches the reference.
pub trait JudgeClient: Send + Sync {
    fn judge(&self, pred: &str, gt: &str) -> Result<bool, ServiceError>;
}

/// Rewrites a QA pair for the mirrored image.
pub trait RewriteClient: Send + Sync {
    fn rewrite(&self, question: &str, answer: &str) -> Result<(String, String), ServiceError>;
}
