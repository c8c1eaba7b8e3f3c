//! Skeleton domain types.
//!
//! Coordinates are image pixels with the y axis growing **downward**. A
//! smaller `y` is higher on screen, which is what the plank hip rule relies
//! on ("hips too high" means `y_hip` above the shoulder/ankle midpoint).
//!
//! Parts follow the COCO-17 order. A keypoint is missing exactly when its
//! confidence is zero; the coordinates of a missing keypoint carry no meaning.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_PARTS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Part {
    Nose = 0,
    LeftEye,
    RightEye,
    LeftEar,
    RightEar,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
}

impl Part {
    pub const ALL: [Part; NUM_PARTS] = [
        Part::Nose,
        Part::LeftEye,
        Part::RightEye,
        Part::LeftEar,
        Part::RightEar,
        Part::LeftShoulder,
        Part::RightShoulder,
        Part::LeftElbow,
        Part::RightElbow,
        Part::LeftWrist,
        Part::RightWrist,
        Part::LeftHip,
        Part::RightHip,
        Part::LeftKnee,
        Part::RightKnee,
        Part::LeftAnkle,
        Part::RightAnkle,
    ];

    /// Left/right symmetric pairs, left first.
    pub const PAIRS: [(Part, Part); 8] = [
        (Part::LeftEye, Part::RightEye),
        (Part::LeftEar, Part::RightEar),
        (Part::LeftShoulder, Part::RightShoulder),
        (Part::LeftElbow, Part::RightElbow),
        (Part::LeftWrist, Part::RightWrist),
        (Part::LeftHip, Part::RightHip),
        (Part::LeftKnee, Part::RightKnee),
        (Part::LeftAnkle, Part::RightAnkle),
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Part> {
        Part::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::Nose => "nose",
            Part::LeftEye => "left_eye",
            Part::RightEye => "right_eye",
            Part::LeftEar => "left_ear",
            Part::RightEar => "right_ear",
            Part::LeftShoulder => "left_shoulder",
            Part::RightShoulder => "right_shoulder",
            Part::LeftElbow => "left_elbow",
            Part::RightElbow => "right_elbow",
            Part::LeftWrist => "left_wrist",
            Part::RightWrist => "right_wrist",
            Part::LeftHip => "left_hip",
            Part::RightHip => "right_hip",
            Part::LeftKnee => "left_knee",
            Part::RightKnee => "right_knee",
            Part::LeftAnkle => "left_ankle",
            Part::RightAnkle => "right_ankle",
        }
    }

    /// `None` for the nose, which sits on the midline.
    pub fn side(self) -> Option<Side> {
        match self {
            Part::Nose => None,
            p if p.index() % 2 == 1 => Some(Side::Left),
            _ => Some(Side::Right),
        }
    }

    /// The symmetric counterpart; the nose maps to itself.
    pub fn mirror(self) -> Part {
        match self.side() {
            None => self,
            Some(Side::Left) => Part::ALL[self.index() + 1],
            Some(Side::Right) => Part::ALL[self.index() - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn shoulder(self) -> Part {
        match self {
            Side::Left => Part::LeftShoulder,
            Side::Right => Part::RightShoulder,
        }
    }

    pub fn hip(self) -> Part {
        match self {
            Side::Left => Part::LeftHip,
            Side::Right => Part::RightHip,
        }
    }

    pub fn knee(self) -> Part {
        match self {
            Side::Left => Part::LeftKnee,
            Side::Right => Part::RightKnee,
        }
    }

    pub fn ankle(self) -> Part {
        match self {
            Side::Left => Part::LeftAnkle,
            Side::Right => Part::RightAnkle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    Detected,
    Filled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
    pub origin: Origin,
}

impl Keypoint {
    pub fn detected(x: f64, y: f64, confidence: f64) -> Self {
        Keypoint { x, y, confidence, origin: Origin::Detected }
    }

    pub fn filled(x: f64, y: f64, confidence: f64) -> Self {
        Keypoint { x, y, confidence, origin: Origin::Filled }
    }

    pub fn missing() -> Self {
        Keypoint::detected(0.0, 0.0, 0.0)
    }

    pub fn is_missing(&self) -> bool {
        self.confidence == 0.0
    }

    pub fn xy(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Rotation, in degrees, the source image was turned by before detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rotation {
    #[default]
    None,
    Cw90,
    Cw180,
    Cw270,
}

impl Rotation {
    pub fn degrees(self) -> u32 {
        match self {
            Rotation::None => 0,
            Rotation::Cw90 => 90,
            Rotation::Cw180 => 180,
            Rotation::Cw270 => 270,
        }
    }

    pub fn from_degrees(degrees: u32) -> Option<Rotation> {
        match degrees % 360 {
            0 => Some(Rotation::None),
            90 => Some(Rotation::Cw90),
            180 => Some(Rotation::Cw180),
            270 => Some(Rotation::Cw270),
            _ => None,
        }
    }

    pub fn then(self, other: Rotation) -> Rotation {
        Rotation::from_degrees(self.degrees() + other.degrees()).expect("multiples of 90")
    }
}

/// One timestamped skeleton with exactly one slot per part.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    keypoints: [Keypoint; NUM_PARTS],
    width: u32,
    height: u32,
    timestamp_ms: i64,
    rotation: Rotation,
}

impl PoseFrame {
    /// Validates confidences and image bounds.
    pub fn new(keypoints: [Keypoint; NUM_PARTS], width: u32, height: u32, timestamp_ms: i64) -> Result<Self> {
        let frame = PoseFrame { keypoints, width, height, timestamp_ms, rotation: Rotation::None };
        frame.validate()?;
        Ok(frame)
    }

    /// Skips validation. Used for derived frames (normalized, rotated) whose
    /// construction already guarantees the invariants.
    pub(crate) fn from_parts(
        keypoints: [Keypoint; NUM_PARTS],
        width: u32,
        height: u32,
        timestamp_ms: i64,
        rotation: Rotation,
    ) -> Self {
        PoseFrame { keypoints, width, height, timestamp_ms, rotation }
    }

    fn validate(&self) -> Result<()> {
        for (part, kp) in Part::ALL.iter().zip(&self.keypoints) {
            if !(0.0..=1.0).contains(&kp.confidence) {
                return Err(Error::InvalidFrame(format!(
                    "{} confidence {} outside [0, 1]",
                    part.name(),
                    kp.confidence
                )));
            }
            if kp.is_missing() {
                continue;
            }
            if !kp.x.is_finite() || !kp.y.is_finite() {
                return Err(Error::InvalidFrame(format!("{} has non-finite coordinates", part.name())));
            }
            if kp.x < 0.0 || kp.x > self.width as f64 || kp.y < 0.0 || kp.y > self.height as f64 {
                return Err(Error::InvalidFrame(format!(
                    "{} at ({}, {}) outside {}x{} image",
                    part.name(),
                    kp.x,
                    kp.y,
                    self.width,
                    self.height
                )));
            }
        }
        Ok(())
    }

    pub fn keypoint(&self, part: Part) -> &Keypoint {
        &self.keypoints[part.index()]
    }

    pub fn keypoints(&self) -> &[Keypoint; NUM_PARTS] {
        &self.keypoints
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn timestamp_ms(&self) -> i64 {
        self.timestamp_ms
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn with_timestamp(mut self, timestamp_ms: i64) -> Self {
        self.timestamp_ms = timestamp_ms;
        self
    }

    /// Coordinates of a present keypoint.
    pub fn point(&self, part: Part) -> Result<(f64, f64)> {
        let kp = self.keypoint(part);
        if kp.is_missing() {
            Err(Error::MissingKeypoint(part))
        } else {
            Ok(kp.xy())
        }
    }

    pub fn confidence_sum(&self) -> f64 {
        self.keypoints.iter().map(|k| k.confidence).sum()
    }

    pub fn missing_parts(&self) -> Vec<Part> {
        Part::ALL.iter().copied().filter(|p| self.keypoint(*p).is_missing()).collect()
    }

    /// Replaces every present keypoint's coordinates through `f`, keeping
    /// confidence and origin. The caller is responsible for bounds.
    pub(crate) fn map_points(&self, width: u32, height: u32, mut f: impl FnMut(f64, f64) -> (f64, f64)) -> PoseFrame {
        let mut keypoints = self.keypoints;
        for kp in keypoints.iter_mut() {
            if kp.is_missing() {
                *kp = Keypoint::missing();
            } else {
                let (x, y) = f(kp.x, kp.y);
                kp.x = x;
                kp.y = y;
            }
        }
        PoseFrame::from_parts(keypoints, width, height, self.timestamp_ms, self.rotation)
    }

    pub(crate) fn with_rotation(mut self, rotation: Rotation) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FrameJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FrameJson::from(self)).expect("frame serialization is infallible")
    }
}

/// Wire form of a frame: `{"t": ms, "w": px, "h": px, "kp": [[x, y, conf]; 17]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameJson {
    pub t: i64,
    pub w: u32,
    pub h: u32,
    pub kp: Vec<[f64; 3]>,
}

impl TryFrom<FrameJson> for PoseFrame {
    type Error = Error;

    fn try_from(raw: FrameJson) -> Result<Self> {
        if raw.kp.len() != NUM_PARTS {
            return Err(Error::InvalidFrame(format!("expected {NUM_PARTS} keypoints, got {}", raw.kp.len())));
        }
        let mut keypoints = [Keypoint::missing(); NUM_PARTS];
        for (slot, [x, y, c]) in keypoints.iter_mut().zip(raw.kp) {
            *slot = if c == 0.0 { Keypoint::missing() } else { Keypoint::detected(x, y, c) };
        }
        PoseFrame::new(keypoints, raw.w, raw.h, raw.t)
    }
}

impl From<&PoseFrame> for FrameJson {
    fn from(frame: &PoseFrame) -> Self {
        FrameJson {
            t: frame.timestamp_ms,
            w: frame.width,
            h: frame.height,
            kp: frame.keypoints.iter().map(|k| [k.x, k.y, k.confidence]).collect(),
        }
    }
}

impl Serialize for PoseFrame {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FrameJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PoseFrame {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = FrameJson::deserialize(deserializer)?;
        PoseFrame::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseLabel {
    Plank,
    Squat,
}

impl PoseLabel {
    pub const ALL: [PoseLabel; 2] = [PoseLabel::Plank, PoseLabel::Squat];

    pub fn as_str(self) -> &'static str {
        match self {
            PoseLabel::Plank => "plank",
            PoseLabel::Squat => "squat",
        }
    }
}

impl fmt::Display for PoseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plank" => Ok(PoseLabel::Plank),
            "squat" => Ok(PoseLabel::Squat),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// An angle measured at `vertex` between the rays toward `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngleTriple {
    pub a: Part,
    pub vertex: Part,
    pub b: Part,
}

impl AngleTriple {
    pub fn new(a: Part, vertex: Part, b: Part) -> Result<Self> {
        if a == vertex || b == vertex || a == b {
            return Err(Error::InvalidParams(format!("angle triple parts must be distinct: {a:?} {vertex:?} {b:?}")));
        }
        Ok(AngleTriple { a, vertex, b })
    }

    pub(crate) const fn of(a: Part, vertex: Part, b: Part) -> Self {
        AngleTriple { a, vertex, b }
    }
}

/// Angle between two rays from a common vertex, in `[0, π]`.
pub fn angle_between(vertex: (f64, f64), a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let (ux, uy) = (a.0 - vertex.0, a.1 - vertex.1);
    let (vx, vy) = (b.0 - vertex.0, b.1 - vertex.1);
    let nu = ux.hypot(uy);
    let nv = vx.hypot(vy);
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    let cos = ((ux * vx + uy * vy) / (nu * nv)).clamp(-1.0, 1.0);
    Some(cos.acos())
}

pub fn angle_at(frame: &PoseFrame, triple: AngleTriple) -> Result<f64> {
    let a = frame.point(triple.a)?;
    let v = frame.point(triple.vertex)?;
    let b = frame.point(triple.b)?;
    angle_between(v, a, b).ok_or(Error::DegenerateRay(triple.vertex))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn frame_with(points: &[(Part, f64, f64)]) -> PoseFrame {
        let mut kps = [Keypoint::missing(); NUM_PARTS];
        for &(p, x, y) in points {
            kps[p.index()] = Keypoint::detected(x, y, 1.0);
        }
        PoseFrame::new(kps, 100, 100, 0).unwrap()
    }

    const T: AngleTriple = AngleTriple::of(Part::LeftShoulder, Part::LeftElbow, Part::LeftWrist);

    #[test]
    fn perpendicular_rays() {
        let f = frame_with(&[(Part::LeftElbow, 0.0, 0.0), (Part::LeftShoulder, 1.0, 0.0), (Part::LeftWrist, 0.0, 1.0)]);
        assert!((angle_at(&f, T).unwrap() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn collinear_same_direction_is_zero() {
        let f = frame_with(&[(Part::LeftElbow, 0.0, 0.0), (Part::LeftShoulder, 1.0, 0.0), (Part::LeftWrist, 2.0, 0.0)]);
        assert_eq!(angle_at(&f, T).unwrap(), 0.0);
    }

    #[test]
    fn offset_vertex_right_angle() {
        // rays (4,0) and (0,5): dot 0
        let f = frame_with(&[(Part::LeftElbow, 3.0, 4.0), (Part::LeftShoulder, 7.0, 4.0), (Part::LeftWrist, 3.0, 9.0)]);
        assert!((angle_at(&f, T).unwrap() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn opposite_rays_is_pi() {
        let f = frame_with(&[(Part::LeftElbow, 5.0, 5.0), (Part::LeftShoulder, 1.0, 5.0), (Part::LeftWrist, 9.0, 5.0)]);
        assert_eq!(angle_at(&f, T).unwrap(), PI);
    }

    #[test]
    fn missing_and_degenerate() {
        let f = frame_with(&[(Part::LeftElbow, 0.0, 0.0), (Part::LeftShoulder, 1.0, 0.0)]);
        assert!(matches!(angle_at(&f, T), Err(Error::MissingKeypoint(Part::LeftWrist))));
        let f = frame_with(&[(Part::LeftElbow, 2.0, 2.0), (Part::LeftShoulder, 2.0, 2.0), (Part::LeftWrist, 0.0, 1.0)]);
        assert!(matches!(angle_at(&f, T), Err(Error::DegenerateRay(Part::LeftElbow))));
    }

    #[test]
    fn part_mirror_and_side() {
        for p in Part::ALL {
            assert_eq!(p.mirror().mirror(), p);
            assert_eq!(Part::from_index(p.index()), Some(p));
        }
        assert_eq!(Part::LeftShoulder.mirror(), Part::RightShoulder);
        assert_eq!(Part::RightAnkle.side(), Some(Side::Right));
        assert_eq!(Part::Nose.side(), None);
    }

    #[test]
    fn triple_rejects_repeats() {
        assert!(AngleTriple::new(Part::Nose, Part::Nose, Part::LeftEye).is_err());
        assert!(AngleTriple::new(Part::Nose, Part::LeftEye, Part::Nose).is_err());
    }

    #[test]
    fn json_schema_and_validation() {
        let mut kp = vec![[10.0, 20.0, 0.9]; NUM_PARTS];
        kp[3] = [0.0, 0.0, 0.0];
        let text = serde_json::to_string(&FrameJson { t: 42, w: 640, h: 480, kp }).unwrap();
        let f = PoseFrame::from_json(&text).unwrap();
        assert_eq!(f.timestamp_ms(), 42);
        assert!(f.keypoint(Part::LeftEar).is_missing());
        assert_eq!(f.point(Part::Nose).unwrap(), (10.0, 20.0));
        assert_eq!(PoseFrame::from_json(&f.to_json()).unwrap(), f);
        assert!(text.contains("\"kp\"") && text.contains("\"t\":42"));

        assert!(PoseFrame::from_json(r#"{"t":0,"w":10,"h":10,"kp":[[1,1,1]]}"#).is_err());
        let mut kp = vec![[10.0, 20.0, 0.9]; NUM_PARTS];
        kp[0] = [700.0, 20.0, 0.9];
        let text = serde_json::to_string(&FrameJson { t: 0, w: 640, h: 480, kp }).unwrap();
        assert!(matches!(PoseFrame::from_json(&text), Err(Error::InvalidFrame(_))));
    }

    #[test]
    fn labels_are_closed() {
        assert_eq!("plank".parse::<PoseLabel>().unwrap(), PoseLabel::Plank);
        assert!(matches!("lunge".parse::<PoseLabel>(), Err(Error::UnknownLabel(_))));
        assert!(serde_json::from_str::<PoseLabel>("\"lunge\"").is_err());
        assert_eq!(serde_json::to_string(&PoseLabel::Squat).unwrap(), "\"squat\"");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn transform((x, y): (f64, f64), s: f64, th: f64, tx: f64, ty: f64) -> (f64, f64) {
            let (c, sn) = (th.cos(), th.sin());
            (s * (c * x - sn * y) + tx, s * (sn * x + c * y) + ty)
        }

        proptest! {
            #[test]
            fn similarity_invariant(
                pts in prop::array::uniform3((-50.0f64..50.0, -50.0f64..50.0)),
                s in 0.1f64..10.0, th in -PI..PI, tx in -100.0f64..100.0, ty in -100.0f64..100.0,
            ) {
                let [v, a, b] = pts;
                prop_assume!((a.0 - v.0).hypot(a.1 - v.1) > 1e-3 && (b.0 - v.0).hypot(b.1 - v.1) > 1e-3);
                let before = angle_between(v, a, b).unwrap();
                // acos is ill-conditioned at 0 and π
                prop_assume!(before.sin() > 1e-3);
                let after = angle_between(
                    transform(v, s, th, tx, ty),
                    transform(a, s, th, tx, ty),
                    transform(b, s, th, tx, ty),
                ).unwrap();
                prop_assert!((before - after).abs() < 1e-9, "{} vs {}", before, after);
            }

            #[test]
            fn symmetric_in_rays(pts in prop::array::uniform3((-50.0f64..50.0, -50.0f64..50.0))) {
                let [v, a, b] = pts;
                prop_assert_eq!(angle_between(v, a, b), angle_between(v, b, a));
            }
        }
    }
}
