use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use statebuddy_core::EngineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: code.to_string(),
                message: message.into(),
            },
        }
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

pub fn engine_status(e: &EngineError) -> StatusCode {
    match e {
        EngineError::InadmissibleTransition { .. } | EngineError::SessionEnded | EngineError::AutopilotDisabled => {
            StatusCode::CONFLICT
        }
        EngineError::UnknownWorkflow(_) => StatusCode::NOT_FOUND,
        EngineError::GuardFailed { .. }
        | EngineError::ActionFailed { .. }
        | EngineError::CallDepthExceeded(_)
        | EngineError::ExecutorUnavailable(_)
        | EngineError::AutopilotStepLimit(_) => StatusCode::UNPROCESSABLE_ENTITY,
        EngineError::Intent(_) => StatusCode::BAD_GATEWAY,
        EngineError::UnknownState { .. } | EngineError::EventLog(_) | EngineError::Replay(_) => {
            StatusCode::INTERNAL_SERVER_ERROR
        }
    }
}

pub fn engine_body(e: &EngineError) -> ErrorBody {
    ErrorBody {
        error: e.code().to_string(),
        message: e.to_string(),
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        Self {
            status: engine_status(&e),
            body: engine_body(&e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
