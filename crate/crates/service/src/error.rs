use formcheck_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cannot read database {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
