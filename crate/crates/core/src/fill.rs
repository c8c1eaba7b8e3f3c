//! Completion of missing keypoints from the rest of the skeleton.
//!
//! Rules, in precedence order:
//! 1. mirror copy: one side of a symmetric pair is missing, so it is
//!    reflected from the other side across the body midline (the vertical
//!    line through the mean x of the present shoulders and hips);
//! 2. line extension: a missing ankle is placed beyond the knee along the
//!    hip→knee ray, at the hip–knee distance;
//! 3. neighbor average: a missing nose is the midpoint of the eyes.
//!
//! Synthesized points are clamped into the image and get confidence
//! `min(cap, source confidences)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{Keypoint, Part, PoseFrame, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillStrategy {
    MirrorCopy,
    LineExtension,
    NeighborAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillConfig {
    pub confidence_cap: f64,
}

impl Default for FillConfig {
    fn default() -> Self {
        FillConfig { confidence_cap: 0.3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FillReport {
    pub filled: Vec<(Part, FillStrategy)>,
}

impl FillReport {
    pub fn filled_parts(&self) -> Vec<Part> {
        self.filled.iter().map(|(p, _)| *p).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.filled.is_empty()
    }

    pub fn strategy(&self, part: Part) -> Option<FillStrategy> {
        self.filled.iter().find(|(p, _)| *p == part).map(|(_, s)| *s)
    }
}

pub fn fill_missing(frame: &PoseFrame) -> Result<(PoseFrame, FillReport)> {
    fill_missing_with(frame, &FillConfig::default())
}

pub fn fill_missing_with(frame: &PoseFrame, config: &FillConfig) -> Result<(PoseFrame, FillReport)> {
    let mut kps = *frame.keypoints();
    let mut report = FillReport::default();
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let clamp = |x: f64, y: f64| (x.clamp(0.0, w), y.clamp(0.0, h));
    let cap = config.confidence_cap;

    let midline = {
        let xs: Vec<f64> = [Part::LeftShoulder, Part::RightShoulder, Part::LeftHip, Part::RightHip]
            .iter()
            .map(|p| &kps[p.index()])
            .filter(|k| !k.is_missing())
            .map(|k| k.x)
            .collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };

    if let Some(mid) = midline {
        for (left, right) in Part::PAIRS {
            let (l, r) = (kps[left.index()], kps[right.index()]);
            let (target, source) = match (l.is_missing(), r.is_missing()) {
                (true, false) => (left, r),
                (false, true) => (right, l),
                _ => continue,
            };
            let (x, y) = clamp(2.0 * mid - source.x, source.y);
            kps[target.index()] = Keypoint::filled(x, y, cap.min(source.confidence));
            report.filled.push((target, FillStrategy::MirrorCopy));
        }
    }

    for side in [Side::Left, Side::Right] {
        let (hip, knee, ankle) = (kps[side.hip().index()], kps[side.knee().index()], kps[side.ankle().index()]);
        if ankle.is_missing() && !hip.is_missing() && !knee.is_missing() {
            let (x, y) = clamp(2.0 * knee.x - hip.x, 2.0 * knee.y - hip.y);
            let conf = cap.min(hip.confidence).min(knee.confidence);
            kps[side.ankle().index()] = Keypoint::filled(x, y, conf);
            report.filled.push((side.ankle(), FillStrategy::LineExtension));
        }
    }

    let (le, re) = (kps[Part::LeftEye.index()], kps[Part::RightEye.index()]);
    if kps[Part::Nose.index()].is_missing() && !le.is_missing() && !re.is_missing() {
        let (x, y) = clamp((le.x + re.x) / 2.0, (le.y + re.y) / 2.0);
        kps[Part::Nose.index()] = Keypoint::filled(x, y, cap.min(le.confidence).min(re.confidence));
        report.filled.push((Part::Nose, FillStrategy::NeighborAverage));
    }

    let missing: Vec<Part> = Part::ALL.iter().copied().filter(|p| kps[p.index()].is_missing()).collect();
    if !missing.is_empty() {
        return Err(Error::UnfillableFrame { missing });
    }
    let filled = PoseFrame::from_parts(kps, frame.width(), frame.height(), frame.timestamp_ms(), frame.rotation());
    Ok((filled, report))
}

/// Midpoint of the two shoulders, the "neck" of the skeleton. Not stored as
/// a keypoint.
pub fn neck(frame: &PoseFrame) -> Result<(f64, f64)> {
    let (lx, ly) = frame.point(Part::LeftShoulder)?;
    let (rx, ry) = frame.point(Part::RightShoulder)?;
    Ok(((lx + rx) / 2.0, (ly + ry) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{Origin, NUM_PARTS};

    fn full_frame() -> [Keypoint; NUM_PARTS] {
        let mut kps = [Keypoint::missing(); NUM_PARTS];
        for (i, kp) in kps.iter_mut().enumerate() {
            *kp = Keypoint::detected(50.0 + i as f64 * 3.0, 20.0 + i as f64 * 10.0, 0.9);
        }
        kps
    }

    #[test]
    fn complete_frame_is_untouched() {
        let f = PoseFrame::new(full_frame(), 400, 400, 7).unwrap();
        let (out, report) = fill_missing(&f).unwrap();
        assert_eq!(out, f);
        assert!(report.is_empty());
    }

    #[test]
    fn ankle_line_extension() {
        let mut kps = full_frame();
        kps[Part::LeftHip.index()] = Keypoint::detected(100.0, 100.0, 1.0);
        kps[Part::LeftKnee.index()] = Keypoint::detected(100.0, 150.0, 1.0);
        kps[Part::LeftAnkle.index()] = Keypoint::missing();
        kps[Part::RightAnkle.index()] = Keypoint::missing();
        let f = PoseFrame::new(kps, 400, 400, 0).unwrap();
        let (out, report) = fill_missing(&f).unwrap();
        let ankle = out.keypoint(Part::LeftAnkle);
        assert_eq!(ankle.xy(), (100.0, 200.0));
        assert_eq!(ankle.origin, Origin::Filled);
        assert_eq!(ankle.confidence, 0.3);
        assert_eq!(report.strategy(Part::LeftAnkle), Some(FillStrategy::LineExtension));
    }

    #[test]
    fn shoulder_mirror_copy() {
        let mut kps = full_frame();
        // midline: mean of left shoulder 80, hips 95 and 125 -> 100
        kps[Part::LeftShoulder.index()] = Keypoint::detected(80.0, 50.0, 0.8);
        kps[Part::RightShoulder.index()] = Keypoint::missing();
        kps[Part::LeftHip.index()] = Keypoint::detected(95.0, 120.0, 0.9);
        kps[Part::RightHip.index()] = Keypoint::detected(125.0, 120.0, 0.9);
        let f = PoseFrame::new(kps, 400, 400, 0).unwrap();
        let (out, report) = fill_missing(&f).unwrap();
        assert_eq!(out.point(Part::RightShoulder).unwrap(), (120.0, 50.0));
        assert_eq!(report.filled, vec![(Part::RightShoulder, FillStrategy::MirrorCopy)]);
    }

    #[test]
    fn mirror_takes_precedence_over_extension() {
        let mut kps = full_frame();
        kps[Part::LeftAnkle.index()] = Keypoint::missing();
        let f = PoseFrame::new(kps, 400, 400, 0).unwrap();
        let (_, report) = fill_missing(&f).unwrap();
        assert_eq!(report.strategy(Part::LeftAnkle), Some(FillStrategy::MirrorCopy));
    }

    #[test]
    fn nose_from_eyes() {
        let mut kps = full_frame();
        kps[Part::Nose.index()] = Keypoint::missing();
        kps[Part::LeftEye.index()] = Keypoint::detected(10.0, 10.0, 0.2);
        kps[Part::RightEye.index()] = Keypoint::detected(20.0, 14.0, 0.9);
        let f = PoseFrame::new(kps, 400, 400, 0).unwrap();
        let (out, report) = fill_missing(&f).unwrap();
        let nose = out.keypoint(Part::Nose);
        assert_eq!(nose.xy(), (15.0, 12.0));
        assert_eq!(nose.confidence, 0.2);
        assert_eq!(report.strategy(Part::Nose), Some(FillStrategy::NeighborAverage));
    }

    #[test]
    fn both_sides_missing_is_unfillable() {
        let mut kps = full_frame();
        kps[Part::LeftWrist.index()] = Keypoint::missing();
        kps[Part::RightWrist.index()] = Keypoint::missing();
        let f = PoseFrame::new(kps, 400, 400, 0).unwrap();
        match fill_missing(&f) {
            Err(Error::UnfillableFrame { missing }) => assert_eq!(missing, vec![Part::LeftWrist, Part::RightWrist]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reflected_points_stay_in_image() {
        let mut kps = full_frame();
        kps[Part::LeftShoulder.index()] = Keypoint::detected(5.0, 50.0, 0.8);
        kps[Part::RightShoulder.index()] = Keypoint::detected(5.0, 50.0, 0.8);
        kps[Part::LeftHip.index()] = Keypoint::detected(5.0, 100.0, 0.8);
        kps[Part::RightHip.index()] = Keypoint::detected(5.0, 100.0, 0.8);
        kps[Part::LeftWrist.index()] = Keypoint::detected(390.0, 10.0, 0.8);
        kps[Part::RightWrist.index()] = Keypoint::missing();
        let f = PoseFrame::new(kps, 400, 400, 0).unwrap();
        let (out, _) = fill_missing(&f).unwrap();
        assert_eq!(out.point(Part::RightWrist).unwrap(), (0.0, 10.0));
    }

    #[test]
    fn config_cap() {
        let mut kps = full_frame();
        kps[Part::RightKnee.index()] = Keypoint::missing();
        let f = PoseFrame::new(kps, 400, 400, 0).unwrap();
        let (out, _) = fill_missing_with(&f, &FillConfig { confidence_cap: 0.5 }).unwrap();
        assert_eq!(out.keypoint(Part::RightKnee).confidence, 0.5);
    }
}
