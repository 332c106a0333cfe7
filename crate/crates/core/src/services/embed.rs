//! Remote embedding provider.

use std::sync::Arc;

use serde::Deserialize;
use serde_json::json;

use super::{HttpClient, ServiceConfig, ServiceError};
use crate::error::Result;
use crate::rewards::SimilarityProvider;

pub struct RemoteEmbedder {
    client: HttpClient,
    id: String,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl RemoteEmbedder {
    pub fn new(config: ServiceConfig) -> Self {
        let id = format!("remote:{}", config.base_url);
        RemoteEmbedder { client: HttpClient::new(config), id }
    }

    pub fn embed_texts(&self, texts: &[&str]) -> std::result::Result<Vec<Vec<f64>>, ServiceError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let value = self.client.post_json("embed", &json!({ "texts": texts }))?;
        let resp: EmbedResponse = serde_json::from_value(value)
            .map_err(|e| ServiceError::ProtocolViolation(format!("embed response: {e}")))?;
        check_vectors(resp.vectors, texts.len())
    }
}

/// Validate shape and renormalize to unit length.
pub fn check_vectors(vectors: Vec<Vec<f64>>, expected: usize) -> std::result::Result<Vec<Vec<f64>>, ServiceError> {
    if vectors.len() != expected {
        return Err(ServiceError::ProtocolViolation(format!(
            "expected {expected} vectors, got {}",
            vectors.len()
        )));
    }
    let dim = vectors.first().map_or(0, Vec::len);
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(ServiceError::ProtocolViolation("ragged or empty embedding dimensions".into()));
    }
    vectors
        .into_iter()
        .map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(ServiceError::ProtocolViolation("zero or non-finite embedding".into()));
            }
            Ok(v.into_iter().map(|x| x / norm).collect())
        })
        .collect()
}

impl SimilarityProvider for RemoteEmbedder {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> Result<Arc<Vec<f64>>> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Arc<Vec<f64>>>> {
        Ok(self.embed_texts(texts)?.into_iter().map(Arc::new).collect())
    }
}
