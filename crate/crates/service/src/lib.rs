//! Streaming form-feedback service.
//!
//! Clients open `/ws` and send keypoint frames; every frame gets one reply,
//! in order. The exemplar database is shared as immutable snapshots and can
//! grow at runtime through `POST /db/exemplar`.

pub mod error;
pub mod protocol;
pub mod routes;
pub mod session;
pub mod state;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use formcheck_core::matching::PoseDatabase;

pub use error::ServiceError;
pub use routes::router;
pub use session::SessionState;
pub use state::{AppState, Snapshot};

/// Environment variable that takes precedence over `--db`.
pub const DB_ENV: &str = "FDR_DB";

pub fn resolve_db_path(flag: Option<PathBuf>, env: Option<String>) -> Option<PathBuf> {
    env.filter(|v| !v.is_empty()).map(PathBuf::from).or(flag)
}

/// Reads a database file, optionally replacing its E-A ratio.
pub fn load_database(path: &Path, ea_ratio: Option<f64>) -> Result<PoseDatabase, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io { path: path.display().to_string(), source })?;
    let db = PoseDatabase::from_json(&text)?;
    Ok(match ea_ratio {
        Some(r) => db.with_ea_ratio(r)?,
        None => db,
    })
}

pub async fn serve(state: Arc<AppState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

pub async fn bind_and_serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, db_size = state.snapshot().db.len(), "listening");
    serve(state, listener).await
}
