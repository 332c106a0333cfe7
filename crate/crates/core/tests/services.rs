//! HTTP clients against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::Value;

use spatial_grpo::rewards::{semantic_reward, SimilarityProvider};
use spatial_grpo::services::{
    JudgeClient, RemoteEmbedder, RemoteJudge, RemoteRewriter, RewriteClient, ServiceConfig, ServiceError, EMBED_URL_VAR,
};

struct FakeServer {
    url: String,
    requests: Arc<Mutex<Vec<(String, Value)>>>,
    handle: Option<JoinHandle<()>>,
}

/// Serve exactly `script.len()` connections, answering each with the next
/// `(status, body)` pair.
fn serve(script: Vec<(u16, &'static str)>) -> FakeServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let seen = requests.clone();
    let handle = std::thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
            let mut len = 0;
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end();
                if h.is_empty() {
                    break;
                }
                if let Some((k, v)) = h.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap();
                    }
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            seen.lock().unwrap().push((path, serde_json::from_slice(&buf).unwrap_or(Value::Null)));
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    FakeServer { url, requests, handle: Some(handle) }
}

impl FakeServer {
    fn config(&self) -> ServiceConfig {
        ServiceConfig { backoff_ms: 1, timeout_ms: 5_000, ..ServiceConfig::with_base_url(&self.url) }
    }

    fn finish(mut self) -> Vec<(String, Value)> {
        self.handle.take().unwrap().join().unwrap();
        self.requests.lock().unwrap().clone()
    }
}

#[test]
fn embed_normalizes_vectors() {
    let s = serve(vec![(200, r#"{"vectors": [[3.0, 4.0], [0.0, 2.0]]}"#)]);
    let e = RemoteEmbedder::new(s.config());
    let v = e.embed_texts(&["a", "b"]).unwrap();
    assert_eq!(v, vec![vec![0.6, 0.8], vec![0.0, 1.0]]);
    let reqs = s.finish();
    assert_eq!(reqs[0].0, "/embed");
    assert_eq!(reqs[0].1["texts"], serde_json::json!(["a", "b"]));
}

#[test]
fn ragged_vectors_are_a_protocol_error() {
    let s = serve(vec![(200, r#"{"vectors": [[1.0, 0.0], [1.0]]}"#)]);
    let e = RemoteEmbedder::new(s.config());
    assert!(matches!(e.embed_texts(&["a", "b"]), Err(ServiceError::ProtocolViolation(_))));
    // not retried
    assert_eq!(s.finish().len(), 1);
}

#[test]
fn server_errors_are_retried() {
    let s = serve(vec![(503, "{}"), (500, "{}"), (200, r#"{"vectors": [[1.0]]}"#)]);
    let e = RemoteEmbedder::new(s.config());
    assert_eq!(e.embed_texts(&["x"]).unwrap(), vec![vec![1.0]]);
    assert_eq!(s.finish().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let s = serve(vec![(500, "{}"), (500, "{}")]);
    let cfg = ServiceConfig { max_retries: 1, ..s.config() };
    let e = RemoteEmbedder::new(cfg);
    match e.embed_texts(&["x"]) {
        Err(ServiceError::Unavailable { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("unexpected {other:?}"),
    }
    s.finish();
}

#[test]
fn client_errors_are_not_retried() {
    let s = serve(vec![(400, r#"{"error": "bad"}"#)]);
    let e = RemoteEmbedder::new(s.config());
    assert!(matches!(e.embed_texts(&["x"]), Err(ServiceError::ProtocolViolation(_))));
    assert_eq!(s.finish().len(), 1);
}

#[test]
fn judge_verdicts() {
    let s = serve(vec![(200, r#"{"verdict": "1"}"#), (200, r#"{"verdict": 0}"#), (200, r#"{"verdict": "correct"}"#)]);
    let j = RemoteJudge::new(s.config());
    assert!(j.judge("It is", "Yes.").unwrap());
    assert!(!j.judge("Nope", "Yes.").unwrap());
    assert!(matches!(j.judge("x", "y"), Err(ServiceError::MalformedVerdict(_))));
    let reqs = s.finish();
    assert_eq!(reqs[0].0, "/judge");
    assert_eq!(reqs[0].1["pred"], "It is");
    assert!(reqs[0].1["prompt"].as_str().unwrap().contains("Predicted answer: It is"));
}

#[test]
fn rewrite_roundtrip_and_malformed() {
    let s = serve(vec![
        (200, "```json\n{\"question\": \"Is the cup to the right of the lamp?\", \"answer\": \"Yes.\"}\n```"),
        (200, "Sure! Here you go."),
    ]);
    let r = RemoteRewriter::new(s.config());
    let (q, a) = r.rewrite("Is the cup to the left of the lamp?", "Yes.").unwrap();
    assert_eq!(q, "Is the cup to the right of the lamp?");
    assert_eq!(a, "Yes.");
    match r.rewrite("q", "a") {
        Err(ServiceError::MalformedRewrite { raw }) => assert_eq!(raw, "Sure! Here you go."),
        other => panic!("unexpected {other:?}"),
    }
    let reqs = s.finish();
    assert_eq!(reqs[0].1["question"], "Is the cup to the left of the lamp?");
}

#[test]
fn unreachable_service_reports_unavailable() {
    // Bind then drop to get a port nobody listens on.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = ServiceConfig { max_retries: 1, backoff_ms: 1, ..ServiceConfig::with_base_url(format!("http://127.0.0.1:{port}")) };
    let e = RemoteEmbedder::new(cfg);
    assert!(matches!(e.embed_texts(&["x"]), Err(ServiceError::Unavailable { attempts: 2, .. })));
}

#[test]
fn responses_are_archived() {
    let dir = tempfile::tempdir().unwrap();
    let s = serve(vec![(200, r#"{"verdict": "1"}"#)]);
    let cfg = ServiceConfig { archive_dir: Some(dir.path().to_path_buf()), ..s.config() };
    RemoteJudge::new(cfg).judge("yes", "yes").unwrap();
    s.finish();
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(files[0].as_ref().unwrap().path()).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["raw_response"], r#"{"verdict": "1"}"#);
}

#[test]
#[ignore = "needs a live embedding service at SVQA_EMBED_URL"]
fn live_embedding_ranks_synonyms() {
    let cfg = ServiceConfig::default().with_env_override(EMBED_URL_VAR);
    let e = RemoteEmbedder::new(cfg);
    let near = semantic_reward("sofa", "couch", &e).unwrap();
    let far = semantic_reward("sofa", "airplane", &e).unwrap();
    assert!(near > far, "sofa/couch {near} vs sofa/airplane {far}");
    assert!(e.provider_id().starts_with("remote:"));
}
