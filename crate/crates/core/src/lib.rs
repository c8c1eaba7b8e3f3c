//! Pose matching and form diagnosis for planks and squats.
//!
//! Frames of 17 COCO keypoints are completed ([`fill`]), normalized and
//! featurized ([`features`]), classified against a labeled exemplar
//! database ([`matching`]) and checked against per-pose rules ([`rules`]).

pub mod analysis;
pub mod error;
pub mod features;
pub mod fill;
pub mod matching;
pub mod pose;
pub mod projection;
pub mod rules;
pub mod synth;

pub use analysis::{analyze_frame, AnalysisConfig, FrameAnalysis};
pub use error::{Error, Result};
pub use features::{AngleFeatureVector, FrameFeatures, RepresentationVector};
pub use fill::{fill_missing, FillReport, FillStrategy};
pub use matching::{build_database, LabeledFrame, MatchResult, PoseDatabase, PoseExemplar};
pub use pose::{Keypoint, Part, PoseFrame, PoseLabel, Rotation};
pub use rules::{diagnose, Diagnosis, ErrorCode, RuleParams};
