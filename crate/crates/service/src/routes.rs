use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use formcheck_core::Error as CoreError;

use crate::error::ServiceError;
use crate::protocol::{DbStats, ErrorKind, ExemplarAdded, ExemplarRequest, Health, HttpError, ServerMessage};
use crate::session::SessionState;
use crate::state::AppState;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/health", get(health))
        .route("/db/stats", get(db_stats))
        .route("/db/exemplar", post(add_exemplar))
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health { status: "ok".into(), db_size: state.snapshot().db.len() })
}

async fn db_stats(State(state): State<Arc<AppState>>) -> Json<DbStats> {
    let snap = state.snapshot();
    Json(DbStats { total: snap.db.len(), version: snap.version, ea_ratio: snap.db.ea_ratio(), labels: snap.db.label_counts() })
}

fn http_error(status: StatusCode, error: &str, detail: impl ToString) -> Response {
    (status, Json(HttpError { error: error.into(), detail: detail.to_string() })).into_response()
}

async fn add_exemplar(State(state): State<Arc<AppState>>, body: String) -> Response {
    let req: ExemplarRequest = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return http_error(StatusCode::BAD_REQUEST, "bad_request", e),
    };
    match state.add_exemplar(&req.frame, req.label, &req.source_id) {
        Ok(snap) => {
            tracing::info!(source_id = %req.source_id, version = snap.version, "exemplar added");
            let body = ExemplarAdded { source_id: req.source_id, db_size: snap.db.len(), version: snap.version };
            (StatusCode::CREATED, Json(body)).into_response()
        }
        Err(ServiceError::Core(e @ CoreError::DuplicateSource(_))) => http_error(StatusCode::CONFLICT, "duplicate_source", e),
        Err(ServiceError::Core(e @ CoreError::UnfillableFrame { .. })) => {
            http_error(StatusCode::UNPROCESSABLE_ENTITY, "unfillable", e)
        }
        Err(ServiceError::Core(e)) => http_error(StatusCode::UNPROCESSABLE_ENTITY, "bad_frame", e),
        Err(e) => http_error(StatusCode::BAD_REQUEST, "bad_request", e),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, state))
}

async fn run_session(mut socket: WebSocket, state: Arc<AppState>) {
    let mut session = SessionState::open(&state);
    tracing::debug!(session = %session.session_id, "session opened");
    while let Some(msg) = socket.recv().await {
        let reply = match msg {
            Ok(Message::Text(text)) => session.handle_text(&state, text.as_str()),
            Ok(Message::Binary(_)) => ServerMessage::error(ErrorKind::BadMessage, "binary messages are not supported", None),
            Ok(Message::Close(_)) => break,
            Ok(_) => continue,
            Err(e) => {
                tracing::debug!(session = %session.session_id, error = %e, "receive failed");
                break;
            }
        };
        if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
            break;
        }
    }
    tracing::debug!(session = %session.session_id, frames = session.frames_processed, "session closed");
}
