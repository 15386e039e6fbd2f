use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

#[derive(Debug, Serialize)]
struct Body {
    error: &'static str,
    message: String,
}

/// Core errors mapped onto HTTP statuses with a stable `error` code.
#[derive(Debug)]
pub struct ApiError(pub attnfov::Error);

impl From<attnfov::Error> for ApiError {
    fn from(e: attnfov::Error) -> Self {
        Self(e)
    }
}

impl ApiError {
    pub fn status_and_code(&self) -> (StatusCode, &'static str) {
        use attnfov::Error::*;
        match &self.0 {
            UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            StaleTrial { .. } => (StatusCode::CONFLICT, "stale_trial"),
            SessionDone(_) => (StatusCode::CONFLICT, "session_done"),
            StaircaseFinished => (StatusCode::CONFLICT, "staircase_finished"),
            CorruptLog { .. } | Io(_) | Json(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
            _ => (StatusCode::BAD_REQUEST, "invalid_request"),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = self.status_and_code();
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        (
            status,
            Json(Body {
                error,
                message: self.0.to_string(),
            }),
        )
            .into_response()
    }
}
