use anpl::llm::*;
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::post;
use axum::{Json, Router};
use proptest::prelude::*;
use serde_json::{json, Value};
use std::sync::{Arc, Mutex};
use std::time::Duration;

fn req() -> ChatRequest {
    ChatRequest::new("system", "user\nline", 0.2, 1)
}

#[test]
fn fingerprint_ignores_line_endings_and_trailing_space() {
    let a = ChatRequest::new("s", "a\nb", 0.1, 1);
    let b = ChatRequest::new("s  ", "a \r\nb\n\n", 0.1, 1);
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_eq!(a.fingerprint().len(), 64);
}

#[test]
fn fingerprint_separates_fields() {
    let base = req().fingerprint();
    let variants = [
        ChatRequest::new("system", "user\nline", 0.3, 1),
        ChatRequest::new("system", "user\nline", 0.2, 10),
        ChatRequest::new("systemuser", "\nline", 0.2, 1),
        ChatRequest::new("system", "user line", 0.2, 1),
    ];
    for v in variants {
        assert_ne!(v.fingerprint(), base);
    }
    // temperatures agree to three decimals
    assert_eq!(ChatRequest::new("system", "user\nline", 0.2000001, 1).fingerprint(), base);
}

proptest! {
    #[test]
    fn any_visible_change_moves_the_fingerprint(text in "[a-z]{1,20}( [a-z]{1,10}){0,4}", at in any::<prop::sample::Index>(), c in "[A-Z]") {
        let a = ChatRequest::new("s", text.clone(), 0.0, 1);
        let i = at.index(text.len());
        let mut mutated = text.clone();
        mutated.replace_range(i..i + 1, &c);
        let b = ChatRequest::new("s", mutated, 0.0, 1);
        prop_assert_ne!(a.fingerprint(), b.fingerprint());
    }
}

#[test]
fn record_then_replay() {
    let mock = MockModel::new().with_sequence(["one", "two", "three"]);
    let rec = RecordingModel::new(mock);
    let r1 = req();
    let r2 = ChatRequest::new("system", "other", 0.0, 1);
    rec.complete(&r1).unwrap();
    rec.complete(&r2).unwrap();
    rec.complete(&r1).unwrap();
    let lines: Vec<String> = rec.exchanges().iter().map(Exchange::to_json_line).collect();
    assert_eq!(lines.len(), 3);
    let parsed: Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(parsed["fingerprint"], r1.fingerprint());
    assert_eq!(parsed["completions"], json!(["one"]));

    let replay = ReplayModel::from_jsonl(lines.join("\n").as_bytes()).unwrap();
    assert_eq!(replay.remaining(), 3);
    // repeated requests come back in recording order
    assert_eq!(replay.complete(&r1).unwrap().completions, ["one"]);
    assert_eq!(replay.complete(&r1).unwrap().completions, ["three"]);
    assert_eq!(replay.complete(&r2).unwrap().completions, ["two"]);
    assert_eq!(
        replay.complete(&r1),
        Err(LlmError::ScriptMiss {
            fingerprint: r1.fingerprint()
        })
    );
}

#[test]
fn replay_falls_back_when_configured() {
    let replay = ReplayModel::new([]).with_fallback(Arc::new(MockModel::new().with_sequence(["live"])));
    assert_eq!(replay.complete(&req()).unwrap().completions, ["live"]);
}

#[test]
fn mock_checks_completion_count() {
    let m = MockModel::new().with_batches(vec![vec!["a".into()]]);
    let r = ChatRequest::new("s", "u", 0.8, 10);
    assert_eq!(m.complete(&r), Err(LlmError::CountMismatch { expected: 10, got: 1 }));
}

#[test]
fn scripted_by_fingerprint() {
    let r = req();
    let m = MockModel::new().script(r.fingerprint(), vec!["exact".into()]);
    assert_eq!(m.complete(&r).unwrap().completions, ["exact"]);
    assert!(matches!(m.complete(&ChatRequest::new("x", "y", 0.0, 1)), Err(LlmError::ScriptMiss { .. })));
}

// ---- HTTP client against a local endpoint ----

#[derive(Clone, Default)]
struct Fake {
    seen: Arc<Mutex<Vec<(HeaderMap, Value)>>>,
    /// Status codes to answer with before succeeding.
    failures: Arc<Mutex<Vec<u16>>>,
}

async fn chat(State(f): State<Fake>, headers: HeaderMap, Json(body): Json<Value>) -> axum::response::Response {
    f.seen.lock().unwrap().push((headers, body.clone()));
    let fail = {
        let mut fl = f.failures.lock().unwrap();
        if fl.is_empty() {
            None
        } else {
            Some(fl.remove(0))
        }
    };
    if let Some(code) = fail {
        let mut h = HeaderMap::new();
        if code == 429 {
            h.insert("retry-after", "0".parse().unwrap());
        }
        return (StatusCode::from_u16(code).unwrap(), h, "slow down").into_response();
    }
    let n = body["n"].as_u64().unwrap_or(1);
    // choices deliberately out of order
    let choices: Vec<Value> = (0..n)
        .rev()
        .map(|i| json!({"index": i, "message": {"role": "assistant", "content": format!("answer {i}")}}))
        .collect();
    Json(json!({"choices": choices})).into_response()
}

fn serve(f: Fake) -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let l = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(l.local_addr().unwrap()).unwrap();
            axum::serve(l, Router::new().route("/v1/chat/completions", post(chat)).with_state(f)).await.unwrap();
        });
    });
    format!("http://{}/v1/chat/completions", rx.recv().unwrap())
}

fn client(endpoint: String) -> HttpModel {
    HttpModel::new(HttpConfig {
        endpoint,
        model: "test-model".into(),
        api_key: Some("sk-test".into()),
        timeout: Duration::from_secs(5),
        retries: 2,
        backoff: Duration::from_millis(1),
    })
    .unwrap()
}

#[test]
fn http_request_shape_and_choice_order() {
    let f = Fake::default();
    let m = client(serve(f.clone()));
    let r = ChatRequest::new("sys", "usr", 0.8, 3);
    let resp = m.complete(&r).unwrap();
    assert_eq!(resp.completions, ["answer 0", "answer 1", "answer 2"]);
    assert_eq!(resp.request_fingerprint, r.fingerprint());
    let seen = f.seen.lock().unwrap();
    let (headers, body) = &seen[0];
    assert_eq!(headers["authorization"], "Bearer sk-test");
    assert_eq!(
        body,
        &json!({
            "model": "test-model",
            "messages": [{"role": "system", "content": "sys"}, {"role": "user", "content": "usr"}],
            "temperature": 0.8,
            "max_tokens": 1024,
            "n": 3
        })
    );
}

#[test]
fn http_retries_rate_limits_and_server_errors() {
    let f = Fake::default();
    *f.failures.lock().unwrap() = vec![429, 503];
    let m = client(serve(f.clone()));
    assert_eq!(m.complete(&req()).unwrap().completions, ["answer 0"]);
    assert_eq!(f.seen.lock().unwrap().len(), 3);
}

#[test]
fn http_gives_up_after_retries() {
    let f = Fake::default();
    *f.failures.lock().unwrap() = vec![500, 500, 500, 500];
    let m = client(serve(f.clone()));
    assert!(matches!(m.complete(&req()), Err(LlmError::Provider { status: 500, .. })));
    assert_eq!(f.seen.lock().unwrap().len(), 3);
}

#[test]
fn http_client_errors_are_not_retried() {
    let f = Fake::default();
    *f.failures.lock().unwrap() = vec![401];
    let m = client(serve(f.clone()));
    assert!(matches!(m.complete(&req()), Err(LlmError::Provider { status: 401, .. })));
    assert_eq!(f.seen.lock().unwrap().len(), 1);
}

#[test]
fn http_unreachable_is_transport() {
    let m = HttpModel::new(HttpConfig {
        endpoint: "http://127.0.0.1:9/none".into(),
        retries: 0,
        ..HttpConfig::default()
    })
    .unwrap();
    assert!(matches!(m.complete(&req()), Err(LlmError::Transport(_))));
}
