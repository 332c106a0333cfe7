//! Yes/no judge over HTTP.

use serde_json::json;

use super::{HttpClient, JudgeClient, ServiceConfig, ServiceError};

pub const JUDGE_PROMPT: &str = include_str!("../../assets/judge_prompt_v1.txt");

pub fn build_judge_prompt(pred: &str, gt: &str) -> String {
    JUDGE_PROMPT.replace("{pred}", pred).replace("{gt}", gt)
}

/// Accept exactly "0" or "1" after trimming.
pub fn parse_verdict(raw: &str) -> Result<bool, ServiceError> {
    match raw.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(ServiceError::MalformedVerdict(other.to_string())),
    }
}

pub struct RemoteJudge {
    client: HttpClient,
}

impl RemoteJudge {
    pub fn new(config: ServiceConfig) -> Self {
        RemoteJudge { client: HttpClient::new(config) }
    }
}

impl JudgeClient for RemoteJudge {
    fn judge(&self, pred: &str, gt: &str) -> Result<bool, ServiceError> {
        let body = json!({ "pred": pred, "gt": gt, "prompt": build_judge_prompt(pred, gt) });
        let value = self.client.post_json("judge", &body)?;
        let verdict = match value.get("verdict") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => return Err(ServiceError::MalformedVerdict(value.to_string())),
        };
        parse_verdict(&verdict)
    }
}
