//! Blocking JSON-over-HTTP transport with bounded retries.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::Value;

use super::{ServiceConfig, ServiceError};

pub struct HttpClient {
    agent: ureq::Agent,
    config: ServiceConfig,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
    next_id: AtomicU64,
}

struct Slot<'a>(&'a HttpClient);

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.slot_freed.notify_one();
    }
}

enum Attempt {
    Retry(String),
    Fatal(ServiceError),
}

impl HttpClient {
    pub fn new(config: ServiceConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient {
            agent,
            config,
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
            next_id: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn acquire(&self) -> Slot<'_> {
        let limit = self.config.max_in_flight.max(1);
        let mut n = self.in_flight.lock().unwrap();
        while *n >= limit {
            n = self.slot_freed.wait(n).unwrap();
        }
        *n += 1;
        Slot(self)
    }

    fn url(&self, endpoint: &str) -> String {
        format!("{}/{}", self.config.base_url.trim_end_matches('/'), endpoint.trim_start_matches('/'))
    }

    fn attempt(&self, url: &str, body: &Value, request_id: &str) -> Result<String, Attempt> {
        let resp = self
            .agent
            .post(url)
            .header("x-request-id", request_id)
            .send_json(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.into_body().read_to_string().map_err(|e| Attempt::Retry(e.to_string()))?;
        match status {
            200..=299 => Ok(text),
            500..=599 => Err(Attempt::Retry(format!("HTTP {status}: {text}"))),
            _ => Err(Attempt::Fatal(ServiceError::ProtocolViolation(format!("HTTP {status}: {text}")))),
        }
    }

    /// POST `body` to `endpoint` and return the raw response text.
    pub fn post_raw(&self, endpoint: &str, body: &Value) -> Result<String, ServiceError> {
        let _slot = self.acquire();
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let request_id = format!("{}-{id:08}", endpoint.trim_matches('/'));
        let url = self.url(endpoint);
        let mut last = String::new();
        let attempts = self.config.max_retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(&url, body, &request_id) {
                Ok(text) => {
                    self.archive(&request_id, body, &text);
                    return Ok(text);
                }
                Err(Attempt::Retry(msg)) => last = msg,
                Err(Attempt::Fatal(e)) => return Err(e),
            }
        }
        Err(ServiceError::Unavailable { attempts, message: last })
    }

    pub fn post_json(&self, endpoint: &str, body: &Value) -> Result<Value, ServiceError> {
        let text = self.post_raw(endpoint, body)?;
        serde_json::from_str(&text).map_err(|e| ServiceError::ProtocolViolation(format!("invalid JSON response: {e}")))
    }

    fn archive(&self, request_id: &str, request: &Value, raw: &str) {
        let Some(dir) = &self.config.archive_dir else { return };
        let record = serde_json::json!({ "request_id": request_id, "request": request, "raw_response": raw });
        // auditing is best effort; a full disk must not fail the call
        let _ = std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(Path::new(dir).join(format!("{request_id}.json")), record.to_string()));
    }
}
