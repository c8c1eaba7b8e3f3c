//! Per-frame feature vectors used for matching.
//!
//! * [`RepresentationVector`]: 52 values, the 34 normalized coordinates in
//!   part order, the 17 confidences and their sum.
//! * [`AngleFeatureVector`]: 12 joint angles in radians, each weighted by
//!   the mean confidence of its three keypoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{angle_at, AngleTriple, Keypoint, Part, PoseFrame, NUM_PARTS};

pub const REPRESENTATION_LEN: usize = 2 * NUM_PARTS + NUM_PARTS + 1;
pub const NUM_ANGLES: usize = 12;

use Part::*;

/// Default joint-angle table. Index order: L/R elbow, L/R shoulder, L/R hip,
/// L/R knee, L/R nose–shoulder–hip, L/R torso cross (shoulder–hip–other hip).
pub const ANGLE_TRIPLES: [AngleTriple; NUM_ANGLES] = [
    AngleTriple::of(LeftShoulder, LeftElbow, LeftWrist),
    AngleTriple::of(RightShoulder, RightElbow, RightWrist),
    AngleTriple::of(LeftElbow, LeftShoulder, LeftHip),
    AngleTriple::of(RightElbow, RightShoulder, RightHip),
    AngleTriple::of(LeftShoulder, LeftHip, LeftKnee),
    AngleTriple::of(RightShoulder, RightHip, RightKnee),
    AngleTriple::of(LeftHip, LeftKnee, LeftAnkle),
    AngleTriple::of(RightHip, RightKnee, RightAnkle),
    AngleTriple::of(Nose, LeftShoulder, LeftHip),
    AngleTriple::of(Nose, RightShoulder, RightHip),
    AngleTriple::of(LeftShoulder, LeftHip, RightHip),
    AngleTriple::of(RightShoulder, RightHip, LeftHip),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationVector {
    coords: [f64; 2 * NUM_PARTS],
    confidences: [f64; NUM_PARTS],
    confidence_sum: f64,
}

impl RepresentationVector {
    pub fn new(coords: [f64; 2 * NUM_PARTS], confidences: [f64; NUM_PARTS]) -> Self {
        let confidence_sum = confidences.iter().sum();
        RepresentationVector { coords, confidences, confidence_sum }
    }

    pub fn coords(&self) -> &[f64; 2 * NUM_PARTS] {
        &self.coords
    }

    pub fn confidences(&self) -> &[f64; NUM_PARTS] {
        &self.confidences
    }

    pub fn confidence_sum(&self) -> f64 {
        self.confidence_sum
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(REPRESENTATION_LEN);
        v.extend_from_slice(&self.coords);
        v.extend_from_slice(&self.confidences);
        v.push(self.confidence_sum);
        v
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != REPRESENTATION_LEN {
            return Err(Error::InvalidVector(format!(
                "representation needs {REPRESENTATION_LEN} values, got {}",
                values.len()
            )));
        }
        let coords: [f64; 2 * NUM_PARTS] = values[..2 * NUM_PARTS].try_into().unwrap();
        let confidences: [f64; NUM_PARTS] = values[2 * NUM_PARTS..3 * NUM_PARTS].try_into().unwrap();
        if coords.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidVector("coordinates must be normalized into [0, 1]".into()));
        }
        if confidences.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidVector("confidences must lie in [0, 1]".into()));
        }
        let v = RepresentationVector::new(coords, confidences);
        if (v.confidence_sum - values[REPRESENTATION_LEN - 1]).abs() > 1e-12 {
            return Err(Error::InvalidVector("confidence sum does not match the confidences".into()));
        }
        Ok(v)
    }
}

impl Serialize for RepresentationVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RepresentationVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        RepresentationVector::from_slice(&values).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleFeatureVector {
    angles: [f64; NUM_ANGLES],
    weights: [f64; NUM_ANGLES],
}

impl AngleFeatureVector {
    pub fn new(angles: [f64; NUM_ANGLES], weights: [f64; NUM_ANGLES]) -> Result<Self> {
        if angles.iter().any(|a| !(0.0..=std::f64::consts::PI).contains(a)) {
            return Err(Error::InvalidVector("angles must lie in [0, π]".into()));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidVector("angle weights must lie in [0, 1]".into()));
        }
        Ok(AngleFeatureVector { angles, weights })
    }

    pub fn from_slices(angles: &[f64], weights: &[f64]) -> Result<Self> {
        let angles: [f64; NUM_ANGLES] = angles
            .try_into()
            .map_err(|_| Error::InvalidVector(format!("need {NUM_ANGLES} angles, got {}", angles.len())))?;
        let weights: [f64; NUM_ANGLES] = weights
            .try_into()
            .map_err(|_| Error::InvalidVector(format!("need {NUM_ANGLES} weights, got {}", weights.len())))?;
        AngleFeatureVector::new(angles, weights)
    }

    pub fn angles(&self) -> &[f64; NUM_ANGLES] {
        &self.angles
    }

    pub fn weights(&self) -> &[f64; NUM_ANGLES] {
        &self.weights
    }
}

/// Translates the confident keypoints so their bounding box starts at the
/// origin and divides by the box diagonal. The result is a 1×1 frame.
pub fn normalize_frame(frame: &PoseFrame) -> Result<PoseFrame> {
    let present: Vec<&Keypoint> = frame.keypoints().iter().filter(|k| !k.is_missing()).collect();
    if present.len() < 2 {
        return Err(Error::DegenerateBoundingBox);
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in &present {
        x0 = x0.min(k.x);
        y0 = y0.min(k.y);
        x1 = x1.max(k.x);
        y1 = y1.max(k.y);
    }
    let (bw, bh) = (x1 - x0, y1 - y0);
    if bw <= 0.0 || bh <= 0.0 {
        return Err(Error::DegenerateBoundingBox);
    }
    let diag = bw.hypot(bh);
    let normalized = frame.map_points(1, 1, |x, y| (((x - x0) / diag).min(1.0), ((y - y0) / diag).min(1.0)));
    Ok(normalized)
}

/// Expects a filled, normalized frame.
pub fn compute_representation(frame: &PoseFrame) -> RepresentationVector {
    let mut coords = [0.0; 2 * NUM_PARTS];
    let mut confidences = [0.0; NUM_PARTS];
    for (i, kp) in frame.keypoints().iter().enumerate() {
        if !kp.is_missing() {
            coords[2 * i] = kp.x;
            coords[2 * i + 1] = kp.y;
        }
        confidences[i] = kp.confidence;
    }
    RepresentationVector::new(coords, confidences)
}

pub fn compute_angles(frame: &PoseFrame) -> Result<AngleFeatureVector> {
    compute_angles_with(frame, &ANGLE_TRIPLES)
}

pub fn compute_angles_with(frame: &PoseFrame, triples: &[AngleTriple; NUM_ANGLES]) -> Result<AngleFeatureVector> {
    let mut angles = [0.0; NUM_ANGLES];
    let mut weights = [0.0; NUM_ANGLES];
    for (k, triple) in triples.iter().enumerate() {
        angles[k] = angle_at(frame, *triple)?;
        let conf = |p: Part| frame.keypoint(p).confidence;
        weights[k] = (conf(triple.a) + conf(triple.vertex) + conf(triple.b)) / 3.0;
    }
    AngleFeatureVector::new(angles, weights)
}

/// Both vectors of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub representation: RepresentationVector,
    pub angles: AngleFeatureVector,
}

impl FrameFeatures {
    /// Normalizes a filled frame and computes its vectors.
    pub fn from_filled(frame: &PoseFrame) -> Result<Self> {
        let normalized = normalize_frame(frame)?;
        Ok(FrameFeatures {
            representation: compute_representation(&normalized),
            angles: compute_angles(&normalized)?,
        })
    }
}
