use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;
use verbum_core::argument::ArgumentError;
use verbum_core::elicitation::ElicitationError;
use verbum_core::lexicon::LexiconError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Argument(#[from] ArgumentError),
    #[error(transparent)]
    Elicitation(#[from] ElicitationError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("storage: {0}")]
    Storage(String),
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        Self::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for ServiceError {
    fn from(e: serde_json::Error) -> Self {
        Self::Storage(e.to_string())
    }
}

/// Error body shared by the HTTP API and the CLI's error stream.
#[derive(Debug, Serialize)]
pub struct Diagnostic {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NotFound(_) => "not_found",
            Self::Conflict(_) => "conflict",
            Self::Validation(_) | Self::Argument(_) | Self::Elicitation(_) | Self::Lexicon(_) => "validation",
            Self::Storage(_) => "storage",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::Conflict(_) => StatusCode::CONFLICT,
            Self::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    pub fn diagnostic(&self) -> Diagnostic {
        let details = match self {
            Self::Validation(v) => v.clone(),
            Self::Lexicon(LexiconError::Invalid(v)) => v
                .iter()
                .map(|x| serde_json::to_string(x).unwrap_or_default())
                .collect(),
            _ => Vec::new(),
        };
        Diagnostic {
            error: self.kind(),
            message: self.to_string(),
            details,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.diagnostic())).into_response()
    }
}
