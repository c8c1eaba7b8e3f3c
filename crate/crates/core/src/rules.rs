//! Form rules for plank and squat.
//!
//! All measurements use a single body side, the one the detector is more
//! confident about. "Foot" is the ankle keypoint.
//!
//! Plank: the back angle is measured at the hip between the rays to the
//! shoulder and to the ankle. The pose is correct when it is strictly greater
//! than the threshold. Otherwise the hip height is compared with the midpoint
//! of shoulder and ankle (image y grows downward): `y_hip` above the midpoint
//! means the hips are too high, below or equal means too low.
//!
//! Squat: the knee angle (rays to hip and ankle) must lie within
//! `π/2 ± σ`, bounds included. The weight fraction
//! `|x_hip − x_ankle| / |hip − knee|` must satisfy `F < fraction < 1`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::MatchResult;
use crate::pose::{angle_at, AngleTriple, PoseFrame, PoseLabel, Side};
use crate::projection::refine_frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleParams {
    /// Degrees.
    pub plank_angle_threshold: f64,
    /// Radians.
    pub knee_tolerance: f64,
    pub weight_fraction_threshold: f64,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams {
            plank_angle_threshold: 165.0,
            knee_tolerance: 0.05 * PI,
            weight_fraction_threshold: 0.8,
        }
    }
}

impl RuleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.plank_angle_threshold > 0.0 && self.plank_angle_threshold < 180.0) {
            return Err(Error::InvalidParams(format!(
                "plank angle threshold must be in (0, 180) degrees, got {}",
                self.plank_angle_threshold
            )));
        }
        if !(self.knee_tolerance > 0.0 && self.knee_tolerance < FRAC_PI_2) {
            return Err(Error::InvalidParams(format!(
                "knee tolerance must be in (0, π/2) radians, got {}",
                self.knee_tolerance
            )));
        }
        if !(self.weight_fraction_threshold > 0.0 && self.weight_fraction_threshold < 1.0) {
            return Err(Error::InvalidParams(format!(
                "weight fraction threshold must be in (0, 1), got {}",
                self.weight_fraction_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    HipsTooHigh,
    HipsTooLow,
    KneeAngleOff,
    LeaningTooForward,
    LeaningTooBack,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 5] = [
        ErrorCode::HipsTooHigh,
        ErrorCode::HipsTooLow,
        ErrorCode::KneeAngleOff,
        ErrorCode::LeaningTooForward,
        ErrorCode::LeaningTooBack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::HipsTooHigh => "HIPS_TOO_HIGH",
            ErrorCode::HipsTooLow => "HIPS_TOO_LOW",
            ErrorCode::KneeAngleOff => "KNEE_ANGLE_OFF",
            ErrorCode::LeaningTooForward => "LEANING_TOO_FORWARD",
            ErrorCode::LeaningTooBack => "LEANING_TOO_BACK",
        }
    }

    pub fn advice(self) -> &'static str {
        match self {
            ErrorCode::HipsTooHigh => "Lower your hips: keep your back straight.",
            ErrorCode::HipsTooLow => "Raise your hips: keep your back straight.",
            ErrorCode::KneeAngleOff => "Bend your knees to about 90 degrees.",
            ErrorCode::LeaningTooForward => "Shift your weight back onto your heels.",
            ErrorCode::LeaningTooBack => "Shift your weight slightly forward.",
        }
    }
}

pub const BACK_ANGLE_DEG: &str = "back_angle_deg";
pub const KNEE_ANGLE_RAD: &str = "knee_angle_rad";
pub const WEIGHT_FRACTION: &str = "weight_fraction";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub label: PoseLabel,
    pub correct: bool,
    pub errors: Vec<ErrorCode>,
    pub measurements: BTreeMap<String, f64>,
    pub advice: Vec<String>,
}

impl Diagnosis {
    fn new(label: PoseLabel, errors: Vec<ErrorCode>, measurements: BTreeMap<String, f64>) -> Self {
        Diagnosis {
            label,
            correct: errors.is_empty(),
            advice: errors.iter().map(|e| e.advice().to_string()).collect(),
            errors,
            measurements,
        }
    }
}

/// The side with the larger summed shoulder, hip, knee and ankle confidence.
/// Ties pick the left side.
pub fn select_profile_side(frame: &PoseFrame) -> Side {
    let chain = |s: Side| -> f64 {
        [s.shoulder(), s.hip(), s.knee(), s.ankle()]
            .iter()
            .map(|p| frame.keypoint(*p).confidence)
            .sum()
    };
    if chain(Side::Right) > chain(Side::Left) {
        Side::Right
    } else {
        Side::Left
    }
}

/// Decision part of the plank rule, on already-measured values.
pub fn plank_errors(back_angle_deg: f64, y_hip: f64, y_shoulder: f64, y_ankle: f64, params: &RuleParams) -> Vec<ErrorCode> {
    if back_angle_deg > params.plank_angle_threshold {
        return vec![];
    }
    if y_hip < (y_shoulder + y_ankle) / 2.0 {
        vec![ErrorCode::HipsTooHigh]
    } else {
        vec![ErrorCode::HipsTooLow]
    }
}

/// Decision part of the squat rule, on already-measured values.
pub fn squat_errors(knee_angle: f64, weight_fraction: f64, params: &RuleParams) -> Vec<ErrorCode> {
    let mut errors = Vec::new();
    if (knee_angle - FRAC_PI_2).abs() > params.knee_tolerance {
        errors.push(ErrorCode::KneeAngleOff);
    }
    if weight_fraction <= params.weight_fraction_threshold {
        errors.push(ErrorCode::LeaningTooForward);
    } else if weight_fraction >= 1.0 {
        errors.push(ErrorCode::LeaningTooBack);
    }
    errors
}

pub fn check_plank(frame: &PoseFrame, params: &RuleParams) -> Result<Diagnosis> {
    let side = select_profile_side(frame);
    let back = angle_at(frame, AngleTriple::new(side.shoulder(), side.hip(), side.ankle())?)?.to_degrees();
    let (_, y_h) = frame.point(side.hip())?;
    let (_, y_s) = frame.point(side.shoulder())?;
    let (_, y_f) = frame.point(side.ankle())?;
    let errors = plank_errors(back, y_h, y_s, y_f, params);
    let measurements = BTreeMap::from([(BACK_ANGLE_DEG.to_string(), back)]);
    Ok(Diagnosis::new(PoseLabel::Plank, errors, measurements))
}

/// Measures on `refined` when given, on `frame` otherwise.
pub fn check_squat(frame: &PoseFrame, params: &RuleParams, refined: Option<&PoseFrame>) -> Result<Diagnosis> {
    let target = refined.unwrap_or(frame);
    let side = select_profile_side(target);
    let (xh, yh) = target.point(side.hip())?;
    let (xk, yk) = target.point(side.knee())?;
    let (xf, _) = target.point(side.ankle())?;
    let thigh = (xh - xk).hypot(yh - yk);
    if thigh == 0.0 {
        return Err(Error::DegenerateThigh);
    }
    let knee = angle_at(target, AngleTriple::new(side.hip(), side.knee(), side.ankle())?)?;
    let fraction = (xh - xf).abs() / thigh;
    let errors = squat_errors(knee, fraction, params);
    let measurements = BTreeMap::from([
        (KNEE_ANGLE_RAD.to_string(), knee),
        (WEIGHT_FRACTION.to_string(), fraction),
    ]);
    Ok(Diagnosis::new(PoseLabel::Squat, errors, measurements))
}

/// Runs the rule set of the matched label. With `use_refinement`, the
/// measurements are taken on the perspective-refined frame.
pub fn diagnose(frame: &PoseFrame, matched: &MatchResult, params: &RuleParams, use_refinement: bool) -> Result<Diagnosis> {
    diagnose_label(frame, matched.label, params, use_refinement)
}

pub fn diagnose_label(frame: &PoseFrame, label: PoseLabel, params: &RuleParams, use_refinement: bool) -> Result<Diagnosis> {
    params.validate()?;
    let refined = if use_refinement { Some(refine_frame(frame)?) } else { None };
    match label {
        PoseLabel::Plank => check_plank(refined.as_ref().unwrap_or(frame), params),
        PoseLabel::Squat => check_squat(frame, params, refined.as_ref()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{Keypoint, Part, NUM_PARTS};

    /// Both body sides share the given chain; the right side is shifted by
    /// (3, 2) pixels and is less confident.
    fn side_view(shoulder: (f64, f64), hip: (f64, f64), knee: (f64, f64), ankle: (f64, f64)) -> PoseFrame {
        let mut kps = [Keypoint::detected(150.0, 150.0, 0.9); NUM_PARTS];
        for (side, dx, dy, c) in [(Side::Left, 0.0, 0.0, 1.0), (Side::Right, 3.0, 2.0, 0.8)] {
            for (part, (x, y)) in [(side.shoulder(), shoulder), (side.hip(), hip), (side.knee(), knee), (side.ankle(), ankle)] {
                kps[part.index()] = Keypoint::detected(x + dx, y + dy, c);
            }
        }
        PoseFrame::new(kps, 400, 400, 0).unwrap()
    }

    fn plank(shoulder: (f64, f64), hip: (f64, f64), ankle: (f64, f64)) -> PoseFrame {
        let knee = ((hip.0 + ankle.0) / 2.0, (hip.1 + ankle.1) / 2.0);
        side_view(shoulder, hip, knee, ankle)
    }

    fn squat(hip: (f64, f64), knee: (f64, f64), ankle: (f64, f64)) -> PoseFrame {
        side_view((hip.0 + 10.0, hip.1 - 60.0), hip, knee, ankle)
    }

    #[test]
    fn param_defaults_and_validation() {
        let p = RuleParams::default();
        assert_eq!(p.plank_angle_threshold, 165.0);
        assert_eq!(p.knee_tolerance, 0.05 * PI);
        assert_eq!(p.weight_fraction_threshold, 0.8);
        p.validate().unwrap();
        assert!(RuleParams { plank_angle_threshold: 180.0, ..p }.validate().is_err());
        assert!(RuleParams { knee_tolerance: FRAC_PI_2, ..p }.validate().is_err());
        assert!(RuleParams { weight_fraction_threshold: 1.0, ..p }.validate().is_err());
    }

    #[test]
    fn profile_side() {
        let mut kps = [Keypoint::detected(10.0, 10.0, 1.0); NUM_PARTS];
        for p in [Part::RightShoulder, Part::RightHip, Part::RightKnee, Part::RightAnkle] {
            kps[p.index()].confidence = 0.3;
        }
        let f = PoseFrame::new(kps, 100, 100, 0).unwrap();
        assert_eq!(select_profile_side(&f), Side::Left);

        let f = PoseFrame::new([Keypoint::detected(10.0, 10.0, 0.7); NUM_PARTS], 100, 100, 0).unwrap();
        assert_eq!(select_profile_side(&f), Side::Left);

        let mut kps = [Keypoint::detected(10.0, 10.0, 1.0); NUM_PARTS];
        kps[Part::LeftKnee.index()] = Keypoint::filled(10.0, 10.0, 0.3);
        kps[Part::LeftAnkle.index()] = Keypoint::filled(10.0, 10.0, 0.3);
        let f = PoseFrame::new(kps, 100, 100, 0).unwrap();
        assert_eq!(select_profile_side(&f), Side::Right);
    }

    #[test]
    fn plank_examples() {
        let p = RuleParams::default();
        let d = check_plank(&plank((0.0, 100.0), (100.0, 100.0), (200.0, 100.0)), &p).unwrap();
        assert!(d.correct && d.advice.is_empty());
        assert_eq!(d.measurements[BACK_ANGLE_DEG], 180.0);

        let d = check_plank(&plank((0.0, 100.0), (100.0, 60.0), (200.0, 100.0)), &p).unwrap();
        // 180 - 2·atan(40/100)
        let expected = 180.0 - 2.0 * (0.4f64).atan().to_degrees();
        assert!((d.measurements[BACK_ANGLE_DEG] - expected).abs() < 1e-9);
        assert!((expected - 136.397).abs() < 1e-3);
        assert_eq!(d.errors, vec![ErrorCode::HipsTooHigh]);

        let d = check_plank(&plank((0.0, 100.0), (100.0, 140.0), (200.0, 100.0)), &p).unwrap();
        assert_eq!(d.errors, vec![ErrorCode::HipsTooLow]);
        assert_eq!(d.advice, vec!["Raise your hips: keep your back straight.".to_string()]);
    }

    #[test]
    fn plank_midpoint_tie_is_too_low() {
        // angle fails, hip exactly level with the shoulder/ankle midpoint
        let p = RuleParams::default();
        assert_eq!(plank_errors(120.0, 100.0, 80.0, 120.0, &p), vec![ErrorCode::HipsTooLow]);
        let d = check_plank(&plank((0.0, 80.0), (100.0, 100.0), (40.0, 120.0)), &p).unwrap();
        assert!(d.measurements[BACK_ANGLE_DEG] < 165.0);
        assert_eq!(d.errors, vec![ErrorCode::HipsTooLow]);
    }

    #[test]
    fn squat_examples() {
        let p = RuleParams::default();
        let d = check_squat(&squat((100.0, 100.0), (100.0, 200.0), (200.0, 200.0)), &p, None).unwrap();
        assert!((d.measurements[KNEE_ANGLE_RAD] - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(d.measurements[WEIGHT_FRACTION], 1.0);
        assert_eq!(d.errors, vec![ErrorCode::LeaningTooBack]);

        let d = check_squat(&squat((100.0, 100.0), (100.0, 200.0), (190.0, 200.0)), &p, None).unwrap();
        assert!((d.measurements[WEIGHT_FRACTION] - 0.9).abs() < 1e-15);
        assert!(d.correct);

        let d = check_squat(&squat((100.0, 100.0), (100.0, 200.0), (150.0, 200.0)), &p, None).unwrap();
        assert_eq!(d.errors, vec![ErrorCode::LeaningTooForward]);
    }

    #[test]
    fn squat_errors_accumulate() {
        let p = RuleParams::default();
        // knee at 45 degrees and strongly forward
        let d = check_squat(&squat((100.0, 100.0), (100.0, 200.0), (130.0, 170.0)), &p, None).unwrap();
        assert_eq!(d.errors, vec![ErrorCode::KneeAngleOff, ErrorCode::LeaningTooForward]);
        assert_eq!(d.advice.len(), 2);
    }

    #[test]
    fn refined_frame_is_measured() {
        let p = RuleParams::default();
        let raw = squat((100.0, 100.0), (100.0, 200.0), (150.0, 200.0));
        let refined = squat((100.0, 100.0), (100.0, 200.0), (190.0, 200.0));
        assert!(!check_squat(&raw, &p, None).unwrap().correct);
        assert!(check_squat(&raw, &p, Some(&refined)).unwrap().correct);
    }

    #[test]
    fn degenerate_thigh() {
        let f = squat((100.0, 100.0), (100.0, 100.0), (150.0, 200.0));
        assert!(matches!(check_squat(&f, &RuleParams::default(), None), Err(Error::DegenerateThigh)));
    }

    #[test]
    fn boundary_decisions() {
        let p = RuleParams::default();
        assert_eq!(plank_errors(165.0, 50.0, 100.0, 100.0, &p), vec![ErrorCode::HipsTooHigh]);
        assert!(plank_errors(165.0f64.next_up(), 50.0, 100.0, 100.0, &p).is_empty());
        assert!(squat_errors(FRAC_PI_2 + p.knee_tolerance, 0.9, &p).is_empty());
        assert!(squat_errors(FRAC_PI_2 - p.knee_tolerance, 0.9, &p).is_empty());
        assert_eq!(squat_errors((FRAC_PI_2 + p.knee_tolerance).next_up(), 0.9, &p), vec![ErrorCode::KneeAngleOff]);
        assert_eq!(squat_errors(FRAC_PI_2, 0.8, &p), vec![ErrorCode::LeaningTooForward]);
        assert!(squat_errors(FRAC_PI_2, 0.8f64.next_up(), &p).is_empty());
        assert_eq!(squat_errors(FRAC_PI_2, 1.0, &p), vec![ErrorCode::LeaningTooBack]);
        assert!(squat_errors(FRAC_PI_2, 1.0f64.next_down(), &p).is_empty());
    }

    #[test]
    fn advice_catalog_is_one_to_one() {
        let texts: std::collections::HashSet<_> = ErrorCode::ALL.iter().map(|e| e.advice()).collect();
        assert_eq!(texts.len(), ErrorCode::ALL.len());
        for e in ErrorCode::ALL {
            let json = serde_json::to_string(&e).unwrap();
            assert_eq!(json, format!("\"{}\"", e.as_str()));
        }
    }

    #[test]
    fn scale_invariance() {
        let p = RuleParams::default();
        let a = check_squat(&squat((100.0, 100.0), (100.0, 200.0), (170.0, 190.0)), &p, None).unwrap();
        let b = check_squat(&squat((50.0, 70.0), (50.0, 120.0), (85.0, 115.0)), &p, None).unwrap();
        assert_eq!(a.errors, b.errors);
        assert!((a.measurements[WEIGHT_FRACTION] - b.measurements[WEIGHT_FRACTION]).abs() < 1e-12);
    }
}
