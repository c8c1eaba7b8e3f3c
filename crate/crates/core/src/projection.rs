//! Perspective refinement from the back quadrilateral and keypoint-space
//! handling of rotated detections.
//!
//! The shoulders and hips are treated as a rectangle. Each observed 2D point
//! is lifted to `(x, y, 1)`, and the 3×3 matrix `T` minimizing
//! `‖P̂·T − P₃‖` is found from the normal equations
//! `T = (P̂ᵀP̂)⁻¹ P̂ᵀ P₃`. Refinement applies `T` to every keypoint, keeps
//! the first two output coordinates and maps the result back onto the
//! original bounding box.

use crate::error::{Error, Result};
use crate::pose::{Part, PoseFrame, Rotation, NUM_PARTS};

/// Reference rectangle, ordered left shoulder, right shoulder, right hip,
/// left hip.
pub const CANONICAL_BACK: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];

const PIVOT_EPS: f64 = 1e-10;
const COLLINEAR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackQuad {
    points: [(f64, f64); 4],
}

impl BackQuad {
    pub const PARTS: [Part; 4] = [Part::LeftShoulder, Part::RightShoulder, Part::RightHip, Part::LeftHip];

    pub fn new(points: [(f64, f64); 4]) -> Self {
        BackQuad { points }
    }

    pub fn from_frame(frame: &PoseFrame) -> Result<Self> {
        let mut points = [(0.0, 0.0); 4];
        for (slot, part) in points.iter_mut().zip(BackQuad::PARTS) {
            *slot = frame.point(part)?;
        }
        Ok(BackQuad { points })
    }

    pub fn points(&self) -> &[(f64, f64); 4] {
        &self.points
    }

    /// Shoelace area of the quad in its cyclic order.
    pub fn area(&self) -> f64 {
        let p = &self.points;
        let twice: f64 = (0..4).map(|i| p[i].0 * p[(i + 1) % 4].1 - p[(i + 1) % 4].0 * p[i].1).sum();
        twice.abs() / 2.0
    }

    fn has_collinear_triple(&self) -> bool {
        let p = &self.points;
        for skip in 0..4 {
            let t: Vec<(f64, f64)> = (0..4).filter(|i| *i != skip).map(|i| p[i]).collect();
            let u = (t[1].0 - t[0].0, t[1].1 - t[0].1);
            let v = (t[2].0 - t[0].0, t[2].1 - t[0].1);
            let cross = (u.0 * v.1 - u.1 * v.0).abs();
            let scale = u.0.hypot(u.1) * v.0.hypot(v.1);
            if scale == 0.0 || cross <= COLLINEAR_EPS * scale {
                return true;
            }
        }
        false
    }
}

/// `T` in `[x, y, 1] · T = [X, Y, Z]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionMatrix([[f64; 3]; 3]);

impl ProjectionMatrix {
    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn apply(&self, x: f64, y: f64) -> [f64; 3] {
        let t = &self.0;
        std::array::from_fn(|j| x * t[0][j] + y * t[1][j] + t[2][j])
    }

    /// Frobenius norm of `P̂·T − reference`.
    pub fn residual(&self, quad: &BackQuad, reference: &[[f64; 3]; 4]) -> f64 {
        residual_of(&self.0, quad, reference)
    }

    /// Builds a matrix from raw entries, for perturbation studies.
    pub fn from_entries(entries: [[f64; 3]; 3]) -> Self {
        ProjectionMatrix(entries)
    }
}

fn residual_of(t: &[[f64; 3]; 3], quad: &BackQuad, reference: &[[f64; 3]; 4]) -> f64 {
    let m = ProjectionMatrix(*t);
    quad.points
        .iter()
        .zip(reference)
        .map(|(&(x, y), r)| {
            let p = m.apply(x, y);
            (0..3).map(|j| (p[j] - r[j]).powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn fit_projection(quad: &BackQuad, reference: &[[f64; 3]; 4]) -> Result<ProjectionMatrix> {
    if quad.has_collinear_triple() {
        return Err(Error::RankDeficient);
    }
    let lifted: Vec<[f64; 3]> = quad.points.iter().map(|&(x, y)| [x, y, 1.0]).collect();
    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [[0.0; 3]; 3];
    for (row, target) in lifted.iter().zip(reference) {
        for i in 0..3 {
            for j in 0..3 {
                normal[i][j] += row[i] * row[j];
                rhs[i][j] += row[i] * target[j];
            }
        }
    }
    solve3(normal, rhs).map(ProjectionMatrix)
}

/// Solves `A·X = B` by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    // columns of a normal matrix differ wildly in scale (pixels squared
    // against the constant lift), so each pivot is judged against its own
    // column's original diagonal entry
    let diag: [f64; 3] = std::array::from_fn(|i| a[i][i].abs());
    if diag.contains(&0.0) {
        return Err(Error::RankDeficient);
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[pivot][col].abs() < PIVOT_EPS * diag[col] {
            return Err(Error::RankDeficient);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (pa, pb) = (a[col], b[col]);
        for row in col + 1..3 {
            let f = a[row][col] / pa[col];
            for (v, p) in a[row][col..].iter_mut().zip(&pa[col..]) {
                *v -= f * p;
            }
            for (v, p) in b[row].iter_mut().zip(&pb) {
                *v -= f * p;
            }
        }
    }
    let mut x = [[0.0; 3]; 3];
    for row in (0..3).rev() {
        for k in 0..3 {
            let tail: f64 = (row + 1..3).map(|j| a[row][j] * x[j][k]).sum();
            x[row][k] = (b[row][k] - tail) / a[row][row];
        }
    }
    Ok(x)
}

/// Re-projects the skeleton through the back-quad fit. Orientation is
/// preserved (a mirrored fit is flipped back) and the result is mapped onto
/// the input's keypoint bounding box.
pub fn refine_frame(frame: &PoseFrame) -> Result<PoseFrame> {
    let quad = BackQuad::from_frame(frame)?;
    let t = fit_projection(&quad, &CANONICAL_BACK)?;
    let e = t.entries();
    let flip = if e[0][0] * e[1][1] - e[0][1] * e[1][0] < 0.0 { -1.0 } else { 1.0 };

    let mut mapped = [(0.0, 0.0); NUM_PARTS];
    let (mut src, mut dst) = (Bounds::empty(), Bounds::empty());
    for (slot, kp) in mapped.iter_mut().zip(frame.keypoints()) {
        if kp.is_missing() {
            continue;
        }
        let p = t.apply(kp.x, kp.y);
        *slot = (flip * p[0], p[1]);
        src.include(kp.x, kp.y);
        dst.include(slot.0, slot.1);
    }
    if dst.width() <= 0.0 || dst.height() <= 0.0 {
        return Err(Error::DegenerateBoundingBox);
    }
    let mut keypoints = *frame.keypoints();
    for (kp, (u, v)) in keypoints.iter_mut().zip(mapped) {
        if kp.is_missing() {
            continue;
        }
        kp.x = (src.x0 + (u - dst.x0) / dst.width() * src.width()).clamp(src.x0, src.x1);
        kp.y = (src.y0 + (v - dst.y0) / dst.height() * src.height()).clamp(src.y0, src.y1);
    }
    Ok(PoseFrame::from_parts(keypoints, frame.width(), frame.height(), frame.timestamp_ms(), frame.rotation()))
}

struct Bounds {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Bounds {
    fn empty() -> Self {
        Bounds { x0: f64::INFINITY, y0: f64::INFINITY, x1: f64::NEG_INFINITY, y1: f64::NEG_INFINITY }
    }

    fn include(&mut self, x: f64, y: f64) {
        self.x0 = self.x0.min(x);
        self.y0 = self.y0.min(y);
        self.x1 = self.x1.max(x);
        self.y1 = self.y1.max(y);
    }

    fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Maps keypoints detected on an image turned clockwise by `rotation` back
/// to the coordinates of the unrotated image. For 90°, a point `(x, y)` of
/// the rotated `w × h` image goes to `(y, w − x)` in the `h × w` original.
pub fn rotate_frame_keypoints(frame: &PoseFrame, rotation: Rotation) -> PoseFrame {
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let rotated = match rotation {
        Rotation::None => frame.clone(),
        Rotation::Cw90 => frame.map_points(frame.height(), frame.width(), |x, y| (y, w - x)),
        Rotation::Cw180 => frame.map_points(frame.width(), frame.height(), |x, y| (w - x, h - y)),
        Rotation::Cw270 => frame.map_points(frame.height(), frame.width(), |x, y| (h - y, x)),
    };
    let applied = frame.rotation().then(rotation);
    rotated.with_rotation(applied)
}

/// The candidate with the largest confidence sum; the earliest wins ties.
pub fn select_best_candidate(candidates: &[PoseFrame]) -> Result<&PoseFrame> {
    let mut best: Option<(&PoseFrame, f64)> = None;
    for c in candidates {
        let score = c.confidence_sum();
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((c, score));
        }
    }
    best.map(|(c, _)| c).ok_or(Error::EmptyCandidates)
}

/// Multi-directional recognition in keypoint space: `detections` pairs each
/// detector output with the clockwise rotation its input image was given.
/// Every detection is mapped back to the original orientation and the most
/// confident one is returned.
pub fn best_orientation(detections: &[(Rotation, PoseFrame)]) -> Result<PoseFrame> {
    let unrotated: Vec<PoseFrame> = detections
        .iter()
        .map(|(r, f)| rotate_frame_keypoints(f, *r))
        .collect();
    select_best_candidate(&unrotated).cloned()
}
