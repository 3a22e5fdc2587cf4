use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use tsvis_core::Error as CoreError;

use crate::auth::AuthError;

/// JSON error body: `{"error": "<code>", "message": "<text>"}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    message: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        use StatusCode as S;
        let (status, code) = match &e {
            CoreError::NotFound(_) => (S::NOT_FOUND, "not-found"),
            CoreError::DuplicateId(_) => (S::CONFLICT, "duplicate-id"),
            CoreError::DuplicateBinding(_) => (S::CONFLICT, "duplicate-binding"),
            CoreError::ReferenceHeld(_) => (S::CONFLICT, "reference-held"),
            CoreError::StaleVersion { .. } => (S::CONFLICT, "stale-version"),
            CoreError::StalePlan(_) => (S::CONFLICT, "stale-plan"),
            CoreError::InvalidSignature(_) => (S::BAD_REQUEST, "invalid-signature"),
            CoreError::UnknownKind(_) => (S::BAD_REQUEST, "unknown-kind"),
            CoreError::InvalidRecord(_) => (S::BAD_REQUEST, "invalid-record"),
            CoreError::UnresolvedReference(_) => (S::BAD_REQUEST, "unresolved-reference"),
            CoreError::SlotMismatch(_) => (S::BAD_REQUEST, "slot-mismatch"),
            CoreError::InvalidQuery(_) => (S::BAD_REQUEST, "invalid-query"),
            CoreError::InvalidSelection(_) => (S::BAD_REQUEST, "invalid-selection"),
            CoreError::ParseFailure { .. } => (S::BAD_REQUEST, "parse-failure"),
            CoreError::Analytics(_) => (S::UNPROCESSABLE_ENTITY, "analytics"),
            CoreError::FetchFailure(_) => (S::BAD_GATEWAY, "fetch-failure"),
            CoreError::Io(_) | CoreError::Serde(_) => (S::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        ApiError::new(status, code, e.to_string())
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        let (status, code) = match e {
            AuthError::InvalidCredentials => (StatusCode::UNAUTHORIZED, "invalid-credentials"),
            AuthError::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized"),
            AuthError::Forbidden => (StatusCode::FORBIDDEN, "forbidden"),
            AuthError::MalformedHash | AuthError::DuplicateUser(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
