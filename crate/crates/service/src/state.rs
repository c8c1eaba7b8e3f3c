use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use formcheck_core::matching::{PoseDatabase, PoseExemplar};
use formcheck_core::{PoseFrame, PoseLabel};

use crate::error::ServiceError;

/// An immutable database with its publication number.
#[derive(Debug)]
pub struct Snapshot {
    pub version: u64,
    pub db: PoseDatabase,
}

/// Shared service state. Readers clone the current snapshot `Arc` and
/// never block each other; additions go through a single writer.
#[derive(Debug)]
pub struct AppState {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    sessions: AtomicU64,
}

impl AppState {
    pub fn new(db: PoseDatabase) -> Self {
        AppState {
            current: RwLock::new(Arc::new(Snapshot { version: 1, db })),
            writer: Mutex::new(()),
            sessions: AtomicU64::new(0),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().unwrap_or_else(PoisonError::into_inner).clone()
    }

    pub(crate) fn next_session_id(&self) -> String {
        format!("s{}", self.sessions.fetch_add(1, Ordering::Relaxed) + 1)
    }

    /// Featurizes the frame, then publishes a new snapshot containing it.
    pub fn add_exemplar(&self, frame: &PoseFrame, label: PoseLabel, source_id: &str) -> Result<Arc<Snapshot>, ServiceError> {
        if source_id.is_empty() {
            return Err(ServiceError::InvalidRequest("source_id must not be empty".into()));
        }
        let exemplar = PoseExemplar::from_frame(frame, label, source_id)?;
        let _guard = self.writer.lock().unwrap_or_else(PoisonError::into_inner);
        let base = self.snapshot();
        let next = Arc::new(Snapshot { version: base.version + 1, db: base.db.with_exemplar(exemplar)? });
        *self.current.write().unwrap_or_else(PoisonError::into_inner) = next.clone();
        Ok(next)
    }
}
