use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cbench_core::Error as CoreError;

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    /// A step was requested before the artifact it needs exists.
    pub fn precondition(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::CONFLICT, "precondition", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code.to_string(),
            message: self.message.clone(),
            detail: self.detail.clone(),
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        use StatusCode as S;
        let message = e.to_string();
        let (status, code, detail) = match &e {
            CoreError::Cycle(path) => (S::UNPROCESSABLE_ENTITY, "cycle", json!({ "cycle": path })),
            CoreError::ImpossibleEvidence => (S::UNPROCESSABLE_ENTITY, "impossible_evidence", Value::Null),
            CoreError::EvidenceUnreachable => (S::UNPROCESSABLE_ENTITY, "evidence_unreachable", Value::Null),
            CoreError::UnknownColumn(c) => (S::BAD_REQUEST, "unknown_column", json!({ "column": c })),
            CoreError::UnknownNode(n) => (S::BAD_REQUEST, "unknown_node", json!({ "node": n })),
            CoreError::UnknownLevel { node, level } => {
                (S::BAD_REQUEST, "unknown_level", json!({ "node": node, "level": level }))
            }
            CoreError::MissingArc(a, b) => (S::BAD_REQUEST, "missing_arc", json!({ "from": a, "to": b })),
            CoreError::Constraints(_) => (S::BAD_REQUEST, "constraints", Value::Null),
            CoreError::Version { found, expected } => (
                S::CONFLICT,
                "version_mismatch",
                json!({ "found": found, "expected": expected }),
            ),
            CoreError::Cancelled => (S::CONFLICT, "cancelled", Value::Null),
            CoreError::Parse { row, .. } => (S::BAD_REQUEST, "parse", json!({ "row": row })),
            CoreError::Io(_) => (S::INTERNAL_SERVER_ERROR, "io", Value::Null),
            CoreError::Incomplete(c) => (S::UNPROCESSABLE_ENTITY, "incomplete", json!({ "column": c })),
            _ => (S::BAD_REQUEST, "invalid", Value::Null),
        };
        ApiError {
            status,
            code,
            message,
            detail,
        }
    }
}

impl From<serde_json::Error> for ApiError {
    fn from(e: serde_json::Error) -> Self {
        ApiError::bad_request(format!("malformed body: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
