use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use multirag_core::backend::{
    BackendError, GenerationRequest, LanguageModel, RemoteBackend, RemoteConfig, ScoreRequest,
};

#[derive(Clone, Default)]
struct Server {
    /// Number of 503 replies to send before answering.
    failures: Arc<AtomicUsize>,
    calls: Arc<AtomicUsize>,
}

async fn generate(State(s): State<Server>, Json(body): Json<Value>) -> (StatusCode, String) {
    s.calls.fetch_add(1, Ordering::SeqCst);
    if s.failures.load(Ordering::SeqCst) > 0 {
        s.failures.fetch_sub(1, Ordering::SeqCst);
        return (StatusCode::SERVICE_UNAVAILABLE, "busy".into());
    }
    let prompt = body["prompt"].as_str().unwrap_or_default();
    if prompt == "reject me" {
        return (StatusCode::BAD_REQUEST, "bad prompt".into());
    }
    if prompt == "garble" {
        return (StatusCode::OK, "{not json".into());
    }
    let reply = json!({
        "text": "Hi there",
        "tokens": [{"t": "Hi", "lp": -0.1}, {"t": " there", "lp": -0.2}],
        "finish": "stop",
        "echo_seed": body["seed"],
    });
    (StatusCode::OK, reply.to_string())
}

async fn score(Json(body): Json<Value>) -> Json<Value> {
    let first = body["candidates"][0].as_str().unwrap_or_default().to_string();
    Json(json!({"scores": {first: -0.25}}))
}

fn spawn(server: Server) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let app = Router::new()
                .route("/v1/generate", post(generate))
                .route("/v1/score", post(score))
                .with_state(server);
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn client(addr: SocketAddr, retries: u32) -> RemoteBackend {
    RemoteBackend::new(RemoteConfig {
        base_url: format!("http://{addr}"),
        timeout_ms: 2_000,
        retries,
        backoff_ms: 5,
        seed: Some(42),
    })
    .unwrap()
}

#[test]
fn generate_and_score_round_trip() {
    let addr = spawn(Server::default());
    let backend = client(addr, 0);
    let g = backend.generate(&GenerationRequest::new("hello", 8)).unwrap();
    assert_eq!(g.text, "Hi there");
    assert_eq!(g.tokens.len(), 2);
    let scores = backend
        .score_continuations(&ScoreRequest::new("p", vec!["[Relevant]".into(), "[Non Relevant]".into()]))
        .unwrap();
    assert_eq!(scores["[Relevant]"], -0.25);
    // Candidates the server left out are filled in as impossible.
    assert_eq!(scores["[Non Relevant]"], f64::NEG_INFINITY);
}

#[test]
fn server_errors_are_retried() {
    let server = Server::default();
    server.failures.store(2, Ordering::SeqCst);
    let addr = spawn(server.clone());
    let g = client(addr, 2).generate(&GenerationRequest::new("hello", 8)).unwrap();
    assert_eq!(g.text, "Hi there");
    assert_eq!(server.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_run_out() {
    let server = Server::default();
    server.failures.store(5, Ordering::SeqCst);
    let addr = spawn(server.clone());
    let err = client(addr, 1).generate(&GenerationRequest::new("hello", 8)).unwrap_err();
    assert!(matches!(err, BackendError::Unreachable { .. }), "{err}");
    assert_eq!(server.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let server = Server::default();
    let addr = spawn(server.clone());
    let err = client(addr, 3).generate(&GenerationRequest::new("reject me", 8)).unwrap_err();
    assert!(matches!(err, BackendError::Rejected { status: 400, .. }), "{err}");
    assert_eq!(server.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_body_is_a_protocol_error() {
    let addr = spawn(Server::default());
    let err = client(addr, 0).generate(&GenerationRequest::new("garble", 8)).unwrap_err();
    assert!(matches!(err, BackendError::Protocol { .. }), "{err}");
}

#[test]
fn nobody_listening() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = client(addr, 1).generate(&GenerationRequest::new("hello", 8)).unwrap_err();
    assert!(matches!(err, BackendError::Unreachable { .. }), "{err}");
}

#[test]
fn invalid_requests_never_leave_the_process() {
    let server = Server::default();
    let addr = spawn(server.clone());
    let err = client(addr, 0).generate(&GenerationRequest::new("hello", 0)).unwrap_err();
    assert!(matches!(err, BackendError::InvalidRequest(_)));
    assert_eq!(server.calls.load(Ordering::SeqCst), 0);
}
