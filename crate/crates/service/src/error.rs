use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lineup_core::Error as CoreError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::SCHEMA_VERSION;

/// Error body: `{schema_version, code, message, detail}`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErrorBody {
    pub schema_version: &'static str,
    pub code: String,
    pub message: String,
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
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "validation",
            message: message.into(),
            detail: json!({ "field": field }),
        }
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: format!("unknown {kind} `{id}`"),
            detail: json!({ "kind": kind, "id": id }),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            schema_version: SCHEMA_VERSION,
            code: self.code.to_owned(),
            message: self.message.clone(),
            detail: self.detail.clone(),
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let message = e.to_string();
        let (status, code, detail) = match &e {
            CoreError::InvalidLineup(v) => (
                StatusCode::CONFLICT,
                "infeasible",
                json!({ "violations": v.iter().map(|x| x.to_string()).collect::<Vec<_>>() }),
            ),
            CoreError::Infeasible { position, .. } => (
                StatusCode::CONFLICT,
                "infeasible",
                json!({ "position": position.map(|p| p.code()) }),
            ),
            CoreError::Validation(_) | CoreError::Parse { .. } | CoreError::Contract(_) => {
                (StatusCode::BAD_REQUEST, "validation", Value::Null)
            }
            CoreError::Reference(r) => (StatusCode::BAD_REQUEST, "validation", json!({ "reference": r })),
            CoreError::MissingData(p) => (StatusCode::BAD_REQUEST, "missing_data", json!({ "player_id": p })),
            CoreError::History(_) => (StatusCode::BAD_REQUEST, "no_history", Value::Null),
            CoreError::SingularRefit { columns } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "numerical",
                json!({ "columns": columns }),
            ),
            CoreError::Numerical(_) | CoreError::Degenerate(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "numerical", Value::Null)
            }
            CoreError::Io(_) | CoreError::Json(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", Value::Null),
        };
        ApiError {
            status,
            code,
            message,
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}
