//! Wire messages of the `/ws` endpoint and the HTTP bodies.

use std::collections::BTreeMap;

use formcheck_core::rules::Diagnosis;
use formcheck_core::{PoseFrame, PoseLabel, RuleParams};
use serde::{Deserialize, Serialize};

/// Partial rule parameters; absent fields keep the session's current value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    pub plank_angle_threshold: Option<f64>,
    pub knee_tolerance: Option<f64>,
    pub weight_fraction_threshold: Option<f64>,
}

impl ParamsPatch {
    pub fn apply(&self, params: &RuleParams) -> RuleParams {
        RuleParams {
            plank_angle_threshold: self.plank_angle_threshold.unwrap_or(params.plank_angle_threshold),
            knee_tolerance: self.knee_tolerance.unwrap_or(params.knee_tolerance),
            weight_fraction_threshold: self.weight_fraction_threshold.unwrap_or(params.weight_fraction_threshold),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigMessage {
    pub ea_ratio: Option<f64>,
    pub params: Option<ParamsPatch>,
    pub min_interval_ms: Option<u64>,
    pub refine_squat: Option<bool>,
    pub refine_plank: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed JSON or a frame that violates the frame schema.
    BadFrame,
    /// A keypoint pair is missing on both sides; the frame is skipped.
    Unfillable,
    /// Keypoints too degenerate to measure (all on one line, zero thigh).
    Degenerate,
    BadConfig,
    /// Valid JSON whose `type` is absent or unknown.
    BadMessage,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchSummary {
    pub label: PoseLabel,
    pub distance: f64,
    pub src: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Diagnosis {
        #[serde(flatten)]
        diagnosis: Diagnosis,
        #[serde(rename = "match")]
        matched: MatchSummary,
        t: i64,
        /// Per-session frame counter, starting at 1.
        seq: u64,
        db_version: u64,
        refined: bool,
    },
    /// The frame was processed but its diagnosis coalesced into the last one
    /// sent (`min_interval_ms` throttling).
    Throttled { t: i64, seq: u64 },
    ConfigAck {
        ea_ratio: f64,
        params: RuleParams,
        min_interval_ms: u64,
        refine_squat: bool,
        refine_plank: bool,
    },
    Error {
        error: ErrorKind,
        detail: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        t: Option<i64>,
    },
}

impl ServerMessage {
    pub fn error(error: ErrorKind, detail: impl Into<String>, t: Option<i64>) -> Self {
        ServerMessage::Error { error, detail: detail.into(), t }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ExemplarRequest {
    pub frame: PoseFrame,
    pub label: PoseLabel,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub db_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbStats {
    pub total: usize,
    pub version: u64,
    pub ea_ratio: f64,
    pub labels: BTreeMap<PoseLabel, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarAdded {
    pub source_id: String,
    pub db_size: usize,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpError {
    pub error: String,
    pub detail: String,
}
