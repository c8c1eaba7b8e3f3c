//! Nearest-exemplar pose classification.
//!
//! Both distances are weighted by the *test* frame's confidences only, so
//! `d(A, B) != d(B, A)` in general. The combined distance mixes them with
//! the E-A ratio `r` as `(r·d_E + d_A) / (r + 1)`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{AngleFeatureVector, FrameFeatures, RepresentationVector};
use crate::pose::{PoseFrame, PoseLabel, NUM_PARTS};

pub const DEFAULT_EA_RATIO: f64 = 2.0;
pub const SCHEMA_VERSION: u32 = 1;

/// Confidence-weighted L1 distance between keypoint coordinates.
pub fn euclidean_distance(test: &RepresentationVector, exemplar: &RepresentationVector) -> Result<f64> {
    let (a, b) = (test.coords(), exemplar.coords());
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, beta) in test.confidences().iter().enumerate() {
        num += beta * ((a[2 * k] - b[2 * k]).abs() + (a[2 * k + 1] - b[2 * k + 1]).abs());
        den += beta;
    }
    if den <= 0.0 {
        return Err(Error::ZeroConfidence);
    }
    Ok(num / den)
}

pub fn angle_distance(test: &AngleFeatureVector, exemplar: &AngleFeatureVector) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((gamma, a), b) in test.weights().iter().zip(test.angles()).zip(exemplar.angles()) {
        num += gamma * (a - b).abs();
        den += gamma;
    }
    if den <= 0.0 {
        return Err(Error::ZeroConfidence);
    }
    Ok(num / den)
}

pub fn combined_distance(d_euclid: f64, d_angle: f64, ratio: f64) -> Result<f64> {
    if ratio <= 0.0 || !ratio.is_finite() {
        return Err(Error::InvalidRatio(ratio));
    }
    Ok((ratio * d_euclid + d_angle) / (ratio + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseExemplar {
    pub label: PoseLabel,
    #[serde(rename = "rep")]
    pub representation: RepresentationVector,
    #[serde(flatten, with = "angle_fields")]
    pub angle_features: AngleFeatureVector,
    #[serde(rename = "src")]
    pub source_id: String,
}

mod angle_fields {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Fields {
        ang: Vec<f64>,
        angw: Vec<f64>,
    }

    pub fn serialize<S: serde::Serializer>(v: &AngleFeatureVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        Fields { ang: v.angles().to_vec(), angw: v.weights().to_vec() }.serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<AngleFeatureVector, D::Error> {
        let f = Fields::deserialize(d)?;
        AngleFeatureVector::from_slices(&f.ang, &f.angw).map_err(serde::de::Error::custom)
    }
}

impl PoseExemplar {
    pub fn from_frame(frame: &PoseFrame, label: PoseLabel, source_id: impl Into<String>) -> Result<Self> {
        let source_id = source_id.into();
        if source_id.is_empty() {
            return Err(Error::InvalidVector("exemplar source id must be non-empty".into()));
        }
        let (filled, _) = crate::fill::fill_missing(frame)?;
        let features = FrameFeatures::from_filled(&filled)?;
        Ok(PoseExemplar {
            label,
            representation: features.representation,
            angle_features: features.angles,
            source_id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub label: PoseLabel,
    pub best_source_id: String,
    pub distance: f64,
    pub d_euclid: f64,
    pub d_angle: f64,
    /// Position of the matched exemplar in the database.
    pub index: usize,
}

/// Labeled exemplars with precomputed vectors. Immutable once built; adding
/// an exemplar produces a new database.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseDatabase {
    exemplars: Vec<PoseExemplar>,
    ea_ratio: f64,
}

#[derive(Serialize, Deserialize)]
struct DatabaseFile {
    schema: u32,
    ea_ratio: f64,
    exemplars: Vec<PoseExemplar>,
}

/// A frame handed to [`build_database`].
#[derive(Debug, Clone)]
pub struct LabeledFrame {
    pub frame: PoseFrame,
    pub label: PoseLabel,
    pub source_id: String,
}

#[derive(Debug)]
pub struct SkippedFrame {
    pub source_id: String,
    pub error: Error,
}

impl PoseDatabase {
    pub fn new(exemplars: Vec<PoseExemplar>, ea_ratio: f64) -> Result<Self> {
        combined_distance(0.0, 0.0, ea_ratio)?;
        if exemplars.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        let mut seen = HashSet::new();
        for e in &exemplars {
            if e.source_id.is_empty() {
                return Err(Error::InvalidVector("exemplar source id must be non-empty".into()));
            }
            if !seen.insert(e.source_id.as_str()) {
                return Err(Error::DuplicateSource(e.source_id.clone()));
            }
        }
        Ok(PoseDatabase { exemplars, ea_ratio })
    }

    pub fn exemplars(&self) -> &[PoseExemplar] {
        &self.exemplars
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn ea_ratio(&self) -> f64 {
        self.ea_ratio
    }

    pub fn with_ea_ratio(mut self, ea_ratio: f64) -> Result<Self> {
        combined_distance(0.0, 0.0, ea_ratio)?;
        self.ea_ratio = ea_ratio;
        Ok(self)
    }

    /// A new database with `exemplar` appended.
    pub fn with_exemplar(&self, exemplar: PoseExemplar) -> Result<Self> {
        if self.exemplars.iter().any(|e| e.source_id == exemplar.source_id) {
            return Err(Error::DuplicateSource(exemplar.source_id));
        }
        let mut exemplars = self.exemplars.clone();
        exemplars.push(exemplar);
        PoseDatabase::new(exemplars, self.ea_ratio)
    }

    pub fn label_counts(&self) -> BTreeMap<PoseLabel, usize> {
        let mut counts: BTreeMap<PoseLabel, usize> = PoseLabel::ALL.iter().map(|l| (*l, 0)).collect();
        for e in &self.exemplars {
            *counts.entry(e.label).or_default() += 1;
        }
        counts
    }

    /// Classifies a filled frame with the database's own ratio.
    pub fn classify(&self, frame: &PoseFrame) -> Result<MatchResult> {
        self.classify_with_ratio(frame, self.ea_ratio)
    }

    pub fn classify_with_ratio(&self, frame: &PoseFrame, ratio: f64) -> Result<MatchResult> {
        let features = FrameFeatures::from_filled(frame)?;
        self.classify_features(&features, ratio)
    }

    /// Linear scan; ties go to the lowest exemplar index.
    pub fn classify_features(&self, features: &FrameFeatures, ratio: f64) -> Result<MatchResult> {
        self.nearest(features, ratio, 1)?.into_iter().next().ok_or(Error::EmptyDatabase)
    }

    /// k-nearest vote. The winning label is the most frequent among the `k`
    /// nearest; equal votes go to the label of the nearer exemplar. The result
    /// describes the nearest exemplar carrying the winning label.
    pub fn classify_k(&self, frame: &PoseFrame, ratio: f64, k: usize) -> Result<MatchResult> {
        let features = FrameFeatures::from_filled(frame)?;
        let nearest = self.nearest(&features, ratio, k.max(1))?;
        let mut votes: BTreeMap<PoseLabel, (usize, usize)> = BTreeMap::new();
        for (rank, m) in nearest.iter().enumerate() {
            votes.entry(m.label).or_insert((0, rank)).0 += 1;
        }
        let (label, _) = votes
            .into_iter()
            .max_by(|(_, (na, ra)), (_, (nb, rb))| na.cmp(nb).then(rb.cmp(ra)))
            .ok_or(Error::EmptyDatabase)?;
        Ok(nearest.into_iter().find(|m| m.label == label).expect("winning label is present"))
    }

    fn nearest(&self, features: &FrameFeatures, ratio: f64, k: usize) -> Result<Vec<MatchResult>> {
        if self.exemplars.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        combined_distance(0.0, 0.0, ratio)?;
        let mut scored = Vec::with_capacity(self.exemplars.len());
        for (index, e) in self.exemplars.iter().enumerate() {
            let d_euclid = euclidean_distance(&features.representation, &e.representation)?;
            let d_angle = angle_distance(&features.angles, &e.angle_features)?;
            let distance = combined_distance(d_euclid, d_angle, ratio)?;
            scored.push((index, distance, d_euclid, d_angle));
        }
        // stable sort keeps the lowest index first among equal distances
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(index, distance, d_euclid, d_angle)| {
                let e = &self.exemplars[index];
                MatchResult { label: e.label, best_source_id: e.source_id.clone(), distance, d_euclid, d_angle, index }
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DatabaseFile {
            schema: SCHEMA_VERSION,
            ea_ratio: self.ea_ratio,
            exemplars: self.exemplars.clone(),
        })
        .expect("database serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatabaseFile = serde_json::from_str(text)?;
        if file.schema != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema(file.schema));
        }
        PoseDatabase::new(file.exemplars, file.ea_ratio)
    }
}

/// Fills and featurizes every frame. Frames that fail are reported and
/// skipped; a duplicate source id or an empty result is an error.
pub fn build_database(
    frames: impl IntoIterator<Item = LabeledFrame>,
    ratio: f64,
) -> Result<(PoseDatabase, Vec<SkippedFrame>)> {
    combined_distance(0.0, 0.0, ratio)?;
    let mut exemplars = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for LabeledFrame { frame, label, source_id } in frames {
        if !seen.insert(source_id.clone()) {
            return Err(Error::DuplicateSource(source_id));
        }
        match PoseExemplar::from_frame(&frame, label, source_id.clone()) {
            Ok(e) => exemplars.push(e),
            Err(error) => skipped.push(SkippedFrame { source_id, error }),
        }
    }
    Ok((PoseDatabase::new(exemplars, ratio)?, skipped))
}

// Keeps the layout constant honest if NUM_PARTS ever changes.
const _: () = assert!(crate::features::REPRESENTATION_LEN == 3 * NUM_PARTS + 1);
