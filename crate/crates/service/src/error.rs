use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use multirag_core::orchestrator::TurnError;

/// Wire form of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                detail: Value::Null,
            },
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id:?}"))
    }

    pub fn conflict(id: &str) -> Self {
        Self::new(StatusCode::CONFLICT, "turn_in_progress", format!("session {id:?} is already running a turn"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<TurnError> for ApiError {
    fn from(e: TurnError) -> Self {
        let message = e.to_string();
        match e {
            TurnError::EmptyMessage => Self::validation(message),
            TurnError::AllCandidatesFailed(reasons) => {
                Self::new(StatusCode::BAD_GATEWAY, "backend_error", message).with_detail(serde_json::json!({ "candidates": reasons }))
            }
            e if e.is_backend() => Self::new(StatusCode::BAD_GATEWAY, "backend_error", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "pipeline_error", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
