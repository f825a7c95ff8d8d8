use std::convert::Infallible;

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;

use multirag_core::orchestrator::TurnResult;

use crate::error::ApiError;
use crate::state::AppState;
use crate::store::Session;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/turns", post(post_turn))
        .route("/sessions/{id}/events", get(events))
        .route("/corpus/stats", get(corpus_stats))
        .route("/healthz", get(healthz))
        .with_state(state)
}

fn parse_body(body: &Bytes) -> Result<Value, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(json!({}));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON body: {e}")))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Session>), ApiError> {
    let overrides = parse_body(&body)?;
    let session = state.create_session(&overrides)?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    Ok(Json(state.session(&id)?.snapshot()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnRequest {
    text: String,
}

async fn post_turn(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<TurnResult>, ApiError> {
    let req: TurnRequest =
        serde_json::from_value(parse_body(&body)?).map_err(|e| ApiError::bad_request(format!("expected {{\"text\": ...}}: {e}")))?;
    if req.text.trim().is_empty() {
        return Err(ApiError::validation("text must not be empty"));
    }
    let handle = state.session(&id)?;
    let permit = handle.try_begin_turn().ok_or_else(|| ApiError::conflict(&id))?;
    let result = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        state.run_turn(&handle, &req.text)
    })
    .await
    .map_err(|e| ApiError::internal(format!("turn task failed: {e}")))??;
    Ok(Json(result))
}

fn ndjson(body: Body, status: StatusCode) -> Response {
    (status, [(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

/// Replays every persisted event, then follows the session live. The
/// response stays open until the client leaves.
async fn events(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let handle = match state.session(&id) {
        Ok(h) => h,
        Err(e) => {
            let line = json!({"type": "error", "code": e.body.code, "message": e.body.message}).to_string() + "\n";
            return ndjson(Body::from(line), e.status);
        }
    };
    let (replay, rx) = handle.subscribe();
    let live = stream::unfold(Some(rx), |rx| async move {
        let mut rx = rx?;
        match rx.recv().await {
            Ok(line) => Some((line, Some(rx))),
            Err(RecvError::Lagged(n)) => {
                let line = json!({"type": "error", "code": "lagged", "message": format!("subscriber fell {n} events behind")});
                Some((line.to_string(), None))
            }
            Err(RecvError::Closed) => None,
        }
    });
    let lines = stream::iter(replay)
        .chain(live)
        .map(|line| Ok::<_, Infallible>(Bytes::from(line + "\n")));
    ndjson(Body::from_stream(lines), StatusCode::OK)
}

async fn corpus_stats(State(state): State<AppState>) -> Json<Value> {
    Json(serde_json::to_value(state.stats()).expect("stats serialize"))
}

async fn healthz(State(state): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "backend": state.backend_name(),
        "sessions": state.session_ids().len(),
    }))
}
