//! The HTTP client against an in-process mock of the scorer service.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use priming::scoring::*;
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &str, Value) -> (u16, Value) + Send + Sync;

struct Mock {
    url: String,
    hits: Arc<AtomicUsize>,
}

fn serve(handler: impl Fn(&str, &str, Value) -> (u16, Value) + Send + Sync + 'static) -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let handler: Arc<Handler> = Arc::new(handler);
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let handler = handler.clone();
            let counter = counter.clone();
            thread::spawn(move || {
                let _ = answer(stream, &*handler, &counter);
            });
        }
    });
    Mock { url, hits }
}

fn answer(stream: TcpStream, handler: &Handler, hits: &AtomicUsize) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(());
    }
    let mut parts = line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or("").to_string(), parts.next().unwrap_or("").to_string());
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h)?;
        if h.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body)?;
    hits.fetch_add(1, Ordering::SeqCst);
    let value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let (status, reply) = handler(&method, &path, value);
    let text = reply.to_string();
    let mut out = &stream;
    write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )?;
    out.flush()
}

fn health() -> Value {
    json!({"model_id": "mock-lm", "modes": ["causal"]})
}

/// One token per whitespace word, each worth -1 nat per character.
fn fake_score(req: &Value) -> Value {
    let target = req["target"].as_str().unwrap();
    let tokens: Vec<&str> = target.split_whitespace().collect();
    let lps: Vec<f64> = tokens.iter().map(|t| -(t.len() as f64)).collect();
    json!({"tokens": tokens, "token_log_probs": lps, "log_prob": lps.iter().sum::<f64>(), "model_id": "mock-lm"})
}

fn service(path: &str, body: Value) -> (u16, Value) {
    match path {
        "/v1/health" => (200, health()),
        "/v1/score" => (200, fake_score(&body)),
        "/v1/score_batch" => {
            let items: Vec<Value> = body["items"].as_array().unwrap().iter().map(fake_score).collect();
            (200, json!({ "items": items }))
        }
        _ => (404, json!({"error": "not found"})),
    }
}

fn fast() -> RemoteOptions {
    RemoteOptions {
        timeout: Duration::from_secs(5),
        retries: 3,
        backoff: Duration::from_millis(1),
        use_batch_endpoint: true,
    }
}

#[test]
fn scores_and_sums_client_side() {
    let mock = serve(|_, p, b| service(p, b));
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    assert_eq!(s.identity(), "mock-lm");
    assert!(s.supports(ScoreMode::Causal));
    assert!(!s.supports(ScoreMode::MaskedPll));
    let r = s.score(&ScoreRequest::causal("The dog ran.", "a cat sat")).unwrap();
    assert_eq!(r.tokens, ["a", "cat", "sat"]);
    assert_eq!(r.log_prob, -7.0);
}

#[test]
fn request_body_follows_protocol() {
    let mock = serve(|_, p, b| {
        if p == "/v1/score" {
            assert_eq!(b, json!({"context": "C.", "target": "t", "mode": "causal"}));
        }
        service(p, b)
    });
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    s.score(&ScoreRequest::causal("C.", "t")).unwrap();
}

#[test]
fn batch_endpoint_keeps_positions() {
    let mock = serve(|_, p, b| service(p, b));
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    let reqs: Vec<ScoreRequest> = (0..50)
        .map(|i| ScoreRequest::causal("", "w".repeat(i % 7 + 1)))
        .collect();
    let out = batch_score(&reqs, &s, 4).unwrap();
    for (i, r) in out.iter().enumerate() {
        assert_eq!(r.log_prob, -((i % 7 + 1) as f64));
    }
    let single = RemoteScorer::connect(&mock.url, RemoteOptions { use_batch_endpoint: false, ..fast() }).unwrap();
    assert_eq!(batch_score(&reqs, &single, 2).unwrap(), out);
}

#[test]
fn unsupported_mode_is_refused_locally() {
    let mock = serve(|_, p, b| service(p, b));
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    let before = mock.hits.load(Ordering::SeqCst);
    let req = ScoreRequest {
        mode: ScoreMode::MaskedPll,
        ..ScoreRequest::causal("", "x")
    };
    assert!(matches!(s.score(&req), Err(ScoreError::UnsupportedMode { .. })));
    assert_eq!(mock.hits.load(Ordering::SeqCst), before);
}

fn rejected(bad: Value) -> String {
    let mock = serve(move |_, p, b| match p {
        "/v1/score" => (200, bad.clone()),
        _ => service(p, b),
    });
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    match s.score(&ScoreRequest::causal("", "a b")) {
        Err(e @ ScoreError::InvalidResponse { .. }) => e.to_string(),
        other => panic!("accepted {other:?}"),
    }
}

#[test]
fn invariant_violations_are_rejected() {
    let m = "mock-lm";
    let e = rejected(json!({"tokens": ["a"], "token_log_probs": [-1.0, -2.0], "log_prob": -3.0, "model_id": m}));
    assert!(e.contains("1 tokens but 2"), "{e}");
    let e = rejected(json!({"tokens": ["a", "b"], "token_log_probs": [-1.0, 0.5], "log_prob": -0.5, "model_id": m}));
    assert!(e.contains("token 1"), "{e}");
    let e = rejected(json!({"tokens": ["a", "b"], "token_log_probs": [-1.0, -2.0], "log_prob": -2.5, "model_id": m}));
    assert!(e.contains("disagrees"), "{e}");
    let e = rejected(json!({"tokens": [], "token_log_probs": [], "log_prob": 0.0, "model_id": m}));
    assert!(e.contains("no target tokens"), "{e}");
    let e = rejected(json!({"tokens": ["a"], "token_log_probs": [-1.0], "log_prob": -1.0, "model_id": "other"}));
    assert!(e.contains("model_id"), "{e}");
    let e = rejected(json!({"tokens": ["a"]}));
    assert!(e.contains("/v1/score"), "{e}");
}

#[test]
fn small_sum_drift_is_tolerated() {
    let mock = serve(|_, p, b| match p {
        "/v1/score" => (200, json!({"tokens": ["a"], "token_log_probs": [-1.0], "log_prob": -1.0000005, "model_id": "mock-lm"})),
        _ => service(p, b),
    });
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    assert_eq!(s.score(&ScoreRequest::causal("", "a")).unwrap().log_prob, -1.0);
}

#[test]
fn transient_failures_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let mock = serve(move |_, p, b| {
        if p == "/v1/score" && c.fetch_add(1, Ordering::SeqCst) < 2 {
            return (503, json!({"error": "warming up"}));
        }
        service(p, b)
    });
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    assert_eq!(s.score(&ScoreRequest::causal("", "ab")).unwrap().log_prob, -2.0);
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let mock = serve(move |_, p, b| {
        if p == "/v1/score" {
            c.fetch_add(1, Ordering::SeqCst);
            return (422, json!({"error": "unsupported mode"}));
        }
        service(p, b)
    });
    let s = RemoteScorer::connect(&mock.url, fast()).unwrap();
    match s.score(&ScoreRequest::causal("", "a")) {
        Err(ScoreError::Service { status: 422, body, .. }) => assert!(body.contains("unsupported")),
        other => panic!("{other:?}"),
    }
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn health_failure_names_endpoint() {
    // Bind then drop to get a port with nothing listening.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let opts = RemoteOptions { retries: 1, ..fast() };
    let e = RemoteScorer::connect(&format!("http://127.0.0.1:{port}"), opts).unwrap_err();
    assert!(matches!(e, ScoreError::Transport { .. }));
    assert!(e.to_string().contains(&format!("127.0.0.1:{port}/v1/health")), "{e}");

    let mock = serve(|_, p, _| match p {
        "/v1/health" => (503, json!({"error": "model not loaded"})),
        _ => (404, Value::Null),
    });
    let e = RemoteScorer::connect(&mock.url, fast()).unwrap_err();
    assert!(e.to_string().contains("/v1/health") && e.to_string().contains("503"), "{e}");
}
