//! The per-frame pipeline: fill, classify, diagnose.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fill::{fill_missing_with, FillConfig, FillReport};
use crate::matching::{MatchResult, PoseDatabase};
use crate::pose::{PoseFrame, PoseLabel};
use crate::projection::refine_frame;
use crate::rules::{check_plank, check_squat, Diagnosis, RuleParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub params: RuleParams,
    pub fill: FillConfig,
    /// Overrides the database's own E-A ratio.
    pub ea_ratio: Option<f64>,
    /// Number of neighbors voting on the label.
    pub k: usize,
    pub refine_plank: bool,
    pub refine_squat: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            params: RuleParams::default(),
            fill: FillConfig::default(),
            ea_ratio: None,
            k: 1,
            refine_plank: false,
            refine_squat: false,
        }
    }
}

impl AnalysisConfig {
    pub fn refines(&self, label: PoseLabel) -> bool {
        match label {
            PoseLabel::Plank => self.refine_plank,
            PoseLabel::Squat => self.refine_squat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameAnalysis {
    pub fill: FillReport,
    #[serde(rename = "match")]
    pub matched: MatchResult,
    pub diagnosis: Diagnosis,
    /// Whether the measurements came from the refined frame. Refinement is
    /// skipped when the back quad is degenerate (a pure profile view).
    pub refined: bool,
}

pub fn analyze_frame(frame: &PoseFrame, db: &PoseDatabase, config: &AnalysisConfig) -> Result<FrameAnalysis> {
    config.params.validate()?;
    let (filled, fill) = fill_missing_with(frame, &config.fill)?;
    let ratio = config.ea_ratio.unwrap_or(db.ea_ratio());
    let matched = if config.k <= 1 {
        db.classify_with_ratio(&filled, ratio)?
    } else {
        db.classify_k(&filled, ratio, config.k)?
    };
    let refined = if config.refines(matched.label) {
        match refine_frame(&filled) {
            Ok(r) => Some(r),
            Err(Error::RankDeficient | Error::DegenerateBoundingBox) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let diagnosis = match matched.label {
        PoseLabel::Plank => check_plank(refined.as_ref().unwrap_or(&filled), &config.params)?,
        PoseLabel::Squat => check_squat(&filled, &config.params, refined.as_ref())?,
    };
    Ok(FrameAnalysis { fill, matched, diagnosis, refined: refined.is_some() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::build_database;
    use crate::synth::{database_frames, generate, SynthKind};

    #[test]
    fn self_match_pipeline() {
        let frames = database_frames(5, 5, 3);
        let (db, skipped) = build_database(frames.clone(), 2.0).unwrap();
        assert!(skipped.is_empty());
        for f in &frames {
            let a = analyze_frame(&f.frame, &db, &AnalysisConfig::default()).unwrap();
            assert_eq!(a.matched.best_source_id, f.source_id);
            assert_eq!(a.matched.distance, 0.0);
            assert_eq!(a.diagnosis.label, f.label);
            assert!(!a.refined);
        }
    }

    #[test]
    fn ratio_override_and_unfillable() {
        let (db, _) = build_database(database_frames(3, 3, 1), 2.0).unwrap();
        let s = &generate(SynthKind::Squat, 1, 0.0, 9).unwrap()[0];
        let cfg = AnalysisConfig { ea_ratio: Some(0.5), ..Default::default() };
        let a = analyze_frame(&s.frame, &db, &cfg).unwrap();
        let direct = db.classify_with_ratio(&s.frame, 0.5).unwrap();
        assert_eq!(a.matched, direct);

        let mut kps = *s.frame.keypoints();
        kps[crate::pose::Part::LeftKnee.index()] = crate::pose::Keypoint::missing();
        kps[crate::pose::Part::RightKnee.index()] = crate::pose::Keypoint::missing();
        let broken = PoseFrame::new(kps, 640, 480, 0).unwrap();
        assert!(matches!(analyze_frame(&broken, &db, &cfg), Err(Error::UnfillableFrame { .. })));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: AnalysisConfig = serde_json::from_str(r#"{"refine_squat": true}"#).unwrap();
        assert!(cfg.refine_squat && !cfg.refine_plank);
        assert_eq!(cfg.k, 1);
    }
}
