use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

use decisive_core::{Error, ScoringError};

/// JSON error body: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), detail: Value::Null }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session with id {id}"))
            .with_detail(serde_json::json!({ "id": id }))
    }

    pub fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        let detail = match &e {
            ScoringError::InvalidScenario { field, .. } => serde_json::json!({ "field": field }),
            _ => Value::Null,
        };
        ApiError::bad_request("invalid_scenario", e.to_string()).with_detail(detail)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::SessionStopped(reason) => ApiError::conflict("session_stopped", e.to_string())
                .with_detail(serde_json::json!({ "reason": reason })),
            Error::AlreadyAsked(..) => ApiError::conflict("already_asked", e.to_string()),
            Error::NumericDegeneracy => ApiError::internal(e.to_string()),
            _ => ApiError::bad_request("invalid_request", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}
