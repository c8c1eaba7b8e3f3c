use formcheck_core::analysis::{analyze_frame, AnalysisConfig};
use formcheck_core::{Error as CoreError, PoseFrame, PoseLabel};
use serde_json::Value;

use crate::protocol::{ConfigMessage, ErrorKind, MatchSummary, ServerMessage};
use crate::state::AppState;

/// Per-connection state. Messages are handled strictly in arrival order.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub session_id: String,
    pub frames_processed: u64,
    pub last_label: Option<PoseLabel>,
    pub config: AnalysisConfig,
    pub min_interval_ms: u64,
    last_emitted: Option<i64>,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>) -> Self {
        SessionState {
            session_id: session_id.into(),
            frames_processed: 0,
            last_label: None,
            config: AnalysisConfig::default(),
            min_interval_ms: 0,
            last_emitted: None,
        }
    }

    pub fn open(state: &AppState) -> Self {
        SessionState::new(state.next_session_id())
    }

    /// Handles one client text message and returns the single reply.
    pub fn handle_text(&mut self, state: &AppState, text: &str) -> ServerMessage {
        let mut value: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return ServerMessage::error(ErrorKind::BadFrame, e.to_string(), None),
        };
        let kind = value.as_object_mut().and_then(|m| m.remove("type"));
        match kind.as_ref().and_then(Value::as_str) {
            Some("frame") => {
                let t = value.get("t").and_then(Value::as_i64);
                match serde_json::from_value::<PoseFrame>(value) {
                    Ok(frame) => self.handle_frame(state, &frame),
                    Err(e) => ServerMessage::error(ErrorKind::BadFrame, e.to_string(), t),
                }
            }
            Some("config") => match serde_json::from_value::<ConfigMessage>(value) {
                Ok(cfg) => self.apply_config(state, &cfg),
                Err(e) => ServerMessage::error(ErrorKind::BadConfig, e.to_string(), None),
            },
            Some(other) => ServerMessage::error(ErrorKind::BadMessage, format!("unknown message type {other:?}"), None),
            None => ServerMessage::error(ErrorKind::BadMessage, "missing string field \"type\"", None),
        }
    }

    pub fn handle_frame(&mut self, state: &AppState, frame: &PoseFrame) -> ServerMessage {
        self.frames_processed += 1;
        let seq = self.frames_processed;
        let t = frame.timestamp_ms();
        if let Some(last) = self.last_emitted {
            if self.min_interval_ms > 0 && t >= last && ((t - last) as u64) < self.min_interval_ms {
                return ServerMessage::Throttled { t, seq };
            }
        }
        let snapshot = state.snapshot();
        match analyze_frame(frame, &snapshot.db, &self.config) {
            Ok(a) => {
                self.last_label = Some(a.matched.label);
                self.last_emitted = Some(t);
                ServerMessage::Diagnosis {
                    diagnosis: a.diagnosis,
                    matched: MatchSummary { label: a.matched.label, distance: a.matched.distance, src: a.matched.best_source_id },
                    t,
                    seq,
                    db_version: snapshot.version,
                    refined: a.refined,
                }
            }
            Err(e) => ServerMessage::error(error_kind(&e), e.to_string(), Some(t)),
        }
    }

    pub fn apply_config(&mut self, state: &AppState, msg: &ConfigMessage) -> ServerMessage {
        let mut next = self.config;
        if let Some(patch) = &msg.params {
            next.params = patch.apply(&next.params);
        }
        if let Err(e) = next.params.validate() {
            return ServerMessage::error(ErrorKind::BadConfig, e.to_string(), None);
        }
        if let Some(r) = msg.ea_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return ServerMessage::error(ErrorKind::BadConfig, format!("ea_ratio must be positive, got {r}"), None);
            }
            next.ea_ratio = Some(r);
        }
        next.refine_squat = msg.refine_squat.unwrap_or(next.refine_squat);
        next.refine_plank = msg.refine_plank.unwrap_or(next.refine_plank);
        self.config = next;
        if let Some(ms) = msg.min_interval_ms {
            self.min_interval_ms = ms;
        }
        ServerMessage::ConfigAck {
            ea_ratio: self.config.ea_ratio.unwrap_or_else(|| state.snapshot().db.ea_ratio()),
            params: self.config.params,
            min_interval_ms: self.min_interval_ms,
            refine_squat: self.config.refine_squat,
            refine_plank: self.config.refine_plank,
        }
    }
}

fn error_kind(e: &CoreError) -> ErrorKind {
    match e {
        CoreError::UnfillableFrame { .. } => ErrorKind::Unfillable,
        CoreError::DegenerateBoundingBox
        | CoreError::DegenerateRay(_)
        | CoreError::DegenerateThigh
        | CoreError::ZeroConfidence
        | CoreError::RankDeficient => ErrorKind::Degenerate,
        CoreError::InvalidFrame(_) | CoreError::MissingKeypoint(_) => ErrorKind::BadFrame,
        CoreError::InvalidParams(_) | CoreError::InvalidRatio(_) => ErrorKind::BadConfig,
        _ => ErrorKind::Internal,
    }
}
