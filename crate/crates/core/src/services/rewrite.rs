//! Mirror rewrite over HTTP.

use serde_json::{json, Value};

use super::{HttpClient, RewriteClient, ServiceConfig, ServiceError};

pub const REWRITE_PROMPT: &str = include_str!("../../assets/rewrite_prompt_v1.txt");

pub fn build_rewrite_prompt(question: &str, answer: &str) -> String {
    REWRITE_PROMPT.replace("{question}", question).replace("{answer}", answer)
}

/// Parse `{"question": ..., "answer": ...}`. A single surrounding code fence
/// is tolerated; anything else that is not that object is malformed.
pub fn parse_rewrite_response(raw: &str) -> Result<(String, String), ServiceError> {
    let malformed = || ServiceError::MalformedRewrite { raw: raw.to_string() };
    let mut body = raw.trim();
    if let Some(inner) = body.strip_prefix("```") {
        let inner = inner.strip_prefix("json").unwrap_or(inner);
        body = inner.strip_suffix("```").ok_or_else(malformed)?.trim();
    }
    let value: Value = serde_json::from_str(body).map_err(|_| malformed())?;
    let field = |k: &str| value.get(k).and_then(Value::as_str).map(str::to_string);
    match (field("question"), field("answer")) {
        (Some(q), Some(a)) => Ok((q, a)),
        _ => Err(malformed()),
    }
}

pub struct RemoteRewriter {
    client: HttpClient,
}

impl RemoteRewriter {
    pub fn new(config: ServiceConfig) -> Self {
        RemoteRewriter { client: HttpClient::new(config) }
    }
}

impl RewriteClient for RemoteRewriter {
    fn rewrite(&self, question: &str, answer: &str) -> Result<(String, String), ServiceError> {
        let body = json!({
            "question": question,
            "answer": answer,
            "prompt": build_rewrite_prompt(question, answer),
        });
        let raw = self.client.post_raw("rewrite", &body)?;
        parse_rewrite_response(&raw)
    }
}
