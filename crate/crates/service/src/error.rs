use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use credchain_core::chain::MineError;
use credchain_core::SubmitError;
use credchain_store::StoreError;
use serde_json::json;

/// Every failure a workflow can surface. Response bodies carry only the
/// error code, plus a detail string for malformed requests.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unauthorized")]
    Unauthorized,
    #[error("forbidden")]
    Forbidden,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("malformed digest")]
    MalformedDigest,
    #[error("{0}")]
    NotFound(&'static str),
    #[error("{0}")]
    Conflict(&'static str),
    #[error("document type is not in the catalog")]
    AddDocumentTypeFirst,
    #[error("{0}")]
    Gone(&'static str),
    #[error("transaction rejected: {0}")]
    Submit(#[from] SubmitError),
    #[error("data directory {0} is not empty")]
    DataDirNotEmpty(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Forbidden => StatusCode::FORBIDDEN,
            ServiceError::BadRequest(_) | ServiceError::MalformedDigest => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) | ServiceError::Submit(_) => StatusCode::CONFLICT,
            ServiceError::AddDocumentTypeFirst => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Gone(_) => StatusCode::GONE,
            ServiceError::DataDirNotEmpty(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Unauthorized => "Unauthorized",
            ServiceError::Forbidden => "Forbidden",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::MalformedDigest => "MalformedDigest",
            ServiceError::NotFound(code) | ServiceError::Conflict(code) | ServiceError::Gone(code) => code,
            ServiceError::AddDocumentTypeFirst => "AddDocumentTypeFirst",
            ServiceError::Submit(e) => match e {
                SubmitError::InvalidSignature => "InvalidSignature",
                SubmitError::NonceGap { .. } => "NonceGap",
                SubmitError::InsufficientBalance => "InsufficientBalance",
                SubmitError::DuplicateTransaction => "DuplicateTransaction",
                SubmitError::ZeroGasLimit => "ZeroGasLimit",
                SubmitError::GasLimitAboveBlockLimit(_) => "GasLimitAboveBlockLimit",
                SubmitError::FutureTimestamp => "FutureTimestamp",
                SubmitError::FeeOverflow => "FeeOverflow",
            },
            ServiceError::DataDirNotEmpty(_) => "DataDirNotEmpty",
            ServiceError::Internal(_) => "Internal",
        }
    }

    pub fn internal(e: impl std::fmt::Display) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::DuplicateEmail => ServiceError::Conflict("DuplicateEmail"),
            StoreError::TxHashAlreadySet => ServiceError::Conflict("TxHashAlreadySet"),
            StoreError::WeakPassword => ServiceError::BadRequest("password must be at least 8 characters".into()),
            StoreError::InvalidArgument(m) => ServiceError::BadRequest(m),
            StoreError::UnsupportedRole(r) => ServiceError::BadRequest(format!("{r} accounts are not supported")),
            StoreError::UnknownUser => ServiceError::NotFound("UnknownUser"),
            StoreError::UnknownStudent => ServiceError::NotFound("UnknownStudent"),
            StoreError::UnknownUniversity => ServiceError::NotFound("UnknownUniversity"),
            StoreError::UnknownDocument => ServiceError::NotFound("UnknownDocument"),
            StoreError::UnknownToken => ServiceError::NotFound("UnknownToken"),
            StoreError::AddDocumentTypeFirst => ServiceError::AddDocumentTypeFirst,
            StoreError::NotDocumentOwner => ServiceError::Forbidden,
            StoreError::Expired => ServiceError::Gone("Expired"),
            StoreError::Revoked => ServiceError::Gone("Revoked"),
            e @ (StoreError::CorruptStore(_) | StoreError::Io(_)) => ServiceError::internal(e),
        }
    }
}

impl From<MineError> for ServiceError {
    fn from(e: MineError) -> Self {
        ServiceError::internal(e)
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::internal(e)
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = match &self {
            ServiceError::BadRequest(detail) => json!({ "error": self.code(), "detail": detail }),
            _ => json!({ "error": self.code() }),
        };
        (status, Json(body)).into_response()
    }
}
