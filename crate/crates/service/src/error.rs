use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),

    #[error("{0}")]
    NotFound(String),

    #[error("unknown ranker `{ranker}`; available rankers: {}", available.join(", "))]
    UnknownRanker { ranker: String, available: Vec<String> },

    #[error("unknown attribute `{attribute}`; available attributes: {}", available.join(", "))]
    UnknownAttribute { attribute: String, available: Vec<String> },

    #[error("{0}")]
    Internal(String),
}

/// Machine-readable error body.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_)
            | ServiceError::UnknownRanker { .. }
            | ServiceError::UnknownAttribute { .. } => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::UnknownRanker { .. } => "unknown_ranker",
            ServiceError::UnknownAttribute { .. } => "unknown_attribute",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let detail = match self {
            ServiceError::UnknownRanker { ranker, available } => {
                serde_json::json!({ "ranker": ranker, "available": available })
            }
            ServiceError::UnknownAttribute { attribute, available } => {
                serde_json::json!({ "attribute": attribute, "available": available })
            }
            _ => Value::Null,
        };
        ErrorBody {
            code: self.code(),
            message: self.to_string(),
            detail,
        }
    }
}

impl From<rankscope::Error> for ServiceError {
    fn from(e: rankscope::Error) -> Self {
        use rankscope::Error as E;
        match e {
            E::NotFound(_) => ServiceError::NotFound(e.to_string()),
            E::InvalidKey(_) | E::Config(_) => ServiceError::BadRequest(e.to_string()),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if let ServiceError::Internal(m) = &self {
            log::error!("{m}");
        }
        (self.status(), axum::Json(self.body())).into_response()
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;
