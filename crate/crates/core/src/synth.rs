//! Seeded generator of labeled plank and squat skeletons with known error
//! codes.
//!
//! Bodies are built in meters in a body frame: `X` forward, `Y` up, `Z`
//! lateral (left side at `+Z`). Training and evaluation frames use an oblique
//! parallel projection that keeps the sagittal plane undistorted and shows
//! the far side offset up and back, so that every rule measurement on the
//! image equals its ground truth. [`rotated_squat_scene`] instead turns the
//! body about the vertical axis and projects orthographically.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::LabeledFrame;
use crate::pose::{Keypoint, Part, PoseFrame, PoseLabel, Side, NUM_PARTS};
use crate::rules::ErrorCode;

pub const DEFAULT_WIDTH: u32 = 640;
pub const DEFAULT_HEIGHT: u32 = 480;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Plank,
    Squat,
    /// A plank held with bent knees: joint angles close to a squat, body
    /// layout of a plank.
    PlankWithBentKnees,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Plank => "plank",
            SynthKind::Squat => "squat",
            SynthKind::PlankWithBentKnees => "plank_with_bent_knees",
        }
    }

    pub fn label(self) -> PoseLabel {
        match self {
            SynthKind::Squat => PoseLabel::Squat,
            SynthKind::Plank | SynthKind::PlankWithBentKnees => PoseLabel::Plank,
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plank" => Ok(SynthKind::Plank),
            "squat" => Ok(SynthKind::Squat),
            "plank_with_bent_knees" => Ok(SynthKind::PlankWithBentKnees),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// One generated frame with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFrame {
    pub frame: PoseFrame,
    pub kind: SynthKind,
    pub label: PoseLabel,
    /// Expected error codes, in the order the rules report them.
    pub truth: Vec<ErrorCode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dims {
    torso: f64,
    thigh: f64,
    shin: f64,
    upper_arm: f64,
    forearm: f64,
    neck: f64,
}

/// Lateral half-widths per part, meters.
fn half_width(part: Part) -> f64 {
    use Part::*;
    match part {
        Nose => 0.0,
        LeftEye | RightEye => 0.032,
        LeftEar | RightEar => 0.075,
        LeftShoulder | RightShoulder => 0.19,
        LeftElbow | RightElbow => 0.2,
        LeftWrist | RightWrist => 0.19,
        LeftHip | RightHip => 0.14,
        LeftKnee | RightKnee => 0.12,
        LeftAnkle | RightAnkle => 0.11,
    }
}

fn dir(deg: f64) -> (f64, f64) {
    let r = deg.to_radians();
    (r.cos(), r.sin())
}

fn add(p: (f64, f64), d: (f64, f64), len: f64) -> (f64, f64) {
    (p.0 + d.0 * len, p.1 + d.1 * len)
}

/// Sagittal (`X`, `Y`) positions of the body chain; both sides share them.
#[derive(Debug, Clone, Copy)]
struct Sagittal {
    shoulder: (f64, f64),
    elbow: (f64, f64),
    wrist: (f64, f64),
    hip: (f64, f64),
    knee: (f64, f64),
    ankle: (f64, f64),
    /// Head reference point and the forward direction of the face.
    head: (f64, f64),
    face: (f64, f64),
}

type Body = [[f64; 3]; NUM_PARTS];

impl Sagittal {
    fn body(&self) -> Body {
        use Part::*;
        let mut out = [[0.0; 3]; NUM_PARTS];
        for part in Part::ALL {
            let (x, y) = match part {
                Nose => add(self.head, self.face, 0.1),
                LeftEye | RightEye => add(self.head, self.face, 0.08),
                LeftEar | RightEar => self.head,
                LeftShoulder | RightShoulder => self.shoulder,
                LeftElbow | RightElbow => self.elbow,
                LeftWrist | RightWrist => self.wrist,
                LeftHip | RightHip => self.hip,
                LeftKnee | RightKnee => self.knee,
                LeftAnkle | RightAnkle => self.ankle,
            };
            // eyes sit slightly above the nose line
            let y = if matches!(part, LeftEye | RightEye) { y + 0.03 } else { y };
            let z = match part.side() {
                Some(Side::Left) => half_width(part),
                Some(Side::Right) => -half_width(part),
                None => 0.0,
            };
            out[part.index()] = [x, y, z];
        }
        out
    }
}

/// Plank back-bend regimes, in degrees of deviation from a straight line.
const PLANK_STRAIGHT_BEND: (f64, f64) = (0.0, 6.0);
const PLANK_BENT_BEND: (f64, f64) = (25.0, 40.0);
const PLANK_CHORD_DEG: (f64, f64) = (8.0, 14.0);

/// Squat knee-angle regimes (degrees) and weight-fraction regimes.
const KNEE_OK: (f64, f64) = (87.0, 93.0);
const KNEE_LOW: (f64, f64) = (60.0, 72.0);
const KNEE_HIGH: (f64, f64) = (108.0, 120.0);
const WEIGHT_OK: (f64, f64) = (0.86, 0.94);
const WEIGHT_FORWARD: (f64, f64) = (0.45, 0.7);
const WEIGHT_BACK: (f64, f64) = (1.08, 1.25);

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    lo <= v && v <= hi
}

/// Seeded generator. Frame geometry, camera and confidences are drawn from
/// the same stream, so a seed fixes the whole corpus.
#[derive(Debug, Clone)]
pub struct SynthGenerator {
    rng: ChaCha8Rng,
    noise: f64,
    width: u32,
    height: u32,
}

impl SynthGenerator {
    /// `noise` is the maximum keypoint displacement as a fraction of the
    /// skeleton's bounding-box diagonal; displacements are uniform over the
    /// disk of that radius.
    pub fn new(seed: u64, noise: f64) -> Result<Self> {
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::InvalidParams(format!("noise must be a finite non-negative number, got {noise}")));
        }
        Ok(SynthGenerator { rng: ChaCha8Rng::seed_from_u64(seed), noise, width: DEFAULT_WIDTH, height: DEFAULT_HEIGHT })
    }

    pub fn with_image_size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    fn uniform(&mut self, (lo, hi): (f64, f64)) -> f64 {
        if lo == hi {
            lo
        } else {
            self.rng.random_range(lo..=hi)
        }
    }

    fn dims(&mut self) -> Dims {
        let k = self.uniform((0.9, 1.1));
        Dims {
            torso: 0.52 * k * self.uniform((0.95, 1.05)),
            thigh: 0.45 * k * self.uniform((0.95, 1.05)),
            shin: 0.43 * k * self.uniform((0.95, 1.05)),
            upper_arm: 0.3 * k,
            forearm: 0.26 * k,
            neck: 0.16 * k,
        }
    }

    pub fn generate(&mut self, kind: SynthKind) -> SynthFrame {
        let (sagittal, truth) = match kind {
            SynthKind::Plank => self.plank(),
            SynthKind::Squat => self.squat(),
            SynthKind::PlankWithBentKnees => self.bent_knee_plank(),
        };
        let frame = self.render_oblique(&sagittal.body());
        SynthFrame { frame, kind, label: kind.label(), truth }
    }

    fn plank(&mut self) -> (Sagittal, Vec<ErrorCode>) {
        let d = self.dims();
        let regime = self.rng.random_range(0..3);
        let (bend, sign, truth) = match regime {
            0 => {
                let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (self.uniform(PLANK_STRAIGHT_BEND), sign, vec![])
            }
            1 => (self.uniform(PLANK_BENT_BEND), 1.0, vec![ErrorCode::HipsTooHigh]),
            _ => (self.uniform(PLANK_BENT_BEND), -1.0, vec![ErrorCode::HipsTooLow]),
        };
        let chord = self.uniform(PLANK_CHORD_DEG);
        let leg_dir = dir(chord + sign * bend / 2.0);
        let torso_dir = dir(chord - sign * bend / 2.0);
        let ankle = (0.0, 0.06);
        let knee = add(ankle, leg_dir, d.shin);
        let hip = add(knee, leg_dir, d.thigh);
        let shoulder = add(hip, torso_dir, d.torso);
        // forearm plank: upper arm near vertical, forearm along the floor
        let elbow = add(shoulder, dir(-90.0 + self.uniform((-8.0, 8.0))), d.upper_arm);
        let wrist = add(elbow, dir(self.uniform((-5.0, 5.0))), d.forearm);
        let (head, face) = self.head(shoulder, torso_dir, d.neck, -70.0);
        (Sagittal { shoulder, elbow, wrist, hip, knee, ankle, head, face }, truth)
    }

    /// Head on the extension of the torso, face turned `face_deg` from the
    /// torso axis (negative turns toward the floor for a prone body).
    fn head(&mut self, shoulder: (f64, f64), torso_dir: (f64, f64), neck: f64, face_deg: f64) -> ((f64, f64), (f64, f64)) {
        let axis = torso_dir.1.atan2(torso_dir.0).to_degrees() + self.uniform((-10.0, 10.0));
        let head = add(shoulder, dir(axis), neck);
        (head, dir(axis + face_deg + self.uniform((-10.0, 10.0))))
    }

    fn squat(&mut self) -> (Sagittal, Vec<ErrorCode>) {
        loop {
            let d = self.dims();
            let knee_off = self.rng.random_bool(0.5);
            let weight_regime = self.rng.random_range(0..3);
            let knee_band = |k: f64| {
                if knee_off {
                    within(k, KNEE_LOW) || within(k, KNEE_HIGH)
                } else {
                    within(k, KNEE_OK)
                }
            };
            let weight_band = match weight_regime {
                0 => WEIGHT_OK,
                1 => WEIGHT_FORWARD,
                _ => WEIGHT_BACK,
            };
            for _ in 0..20_000 {
                // shin tilt forward from vertical, thigh elevation above horizontal
                let tilt = self.uniform((-20.0, 40.0));
                let thigh = self.uniform((-30.0, 60.0));
                let knee_deg = 90.0 + thigh - tilt;
                let ratio = d.shin / d.thigh;
                let fraction = (thigh.to_radians().cos() - ratio * tilt.to_radians().sin()).abs();
                if !knee_band(knee_deg) || !within(fraction, weight_band) {
                    continue;
                }
                let mut truth = Vec::new();
                if knee_off {
                    truth.push(ErrorCode::KneeAngleOff);
                }
                match weight_regime {
                    1 => truth.push(ErrorCode::LeaningTooForward),
                    2 => truth.push(ErrorCode::LeaningTooBack),
                    _ => {}
                }
                return (self.squat_body(&d, tilt, thigh), truth);
            }
        }
    }

    fn squat_body(&mut self, d: &Dims, tilt: f64, thigh: f64) -> Sagittal {
        let ankle = (0.0, 0.08);
        let knee = add(ankle, dir(90.0 - tilt), d.shin);
        let hip = add(knee, dir(180.0 - thigh), d.thigh);
        let lean = self.uniform((15.0, 45.0));
        let torso_dir = dir(90.0 - lean);
        let shoulder = add(hip, torso_dir, d.torso);
        // arms held out in front
        let raise = self.uniform((-20.0, 15.0));
        let elbow = add(shoulder, dir(raise), d.upper_arm);
        let wrist = add(elbow, dir(raise + self.uniform((0.0, 40.0))), d.forearm);
        let (head, face) = self.head(shoulder, torso_dir, d.neck, lean - 90.0);
        Sagittal { shoulder, elbow, wrist, hip, knee, ankle, head, face }
    }

    /// Hands on the floor under the shoulders, torso near level, thighs near
    /// vertical and shins trailing behind: hips sit above the
    /// shoulder-to-ankle line.
    fn bent_knee_plank(&mut self) -> (Sagittal, Vec<ErrorCode>) {
        let d = self.dims();
        let hip = (0.0, 0.0);
        let torso_deg = self.uniform((-8.0, 8.0));
        let torso_dir = dir(torso_deg);
        let shoulder = add(hip, torso_dir, d.torso);
        let knee = add(hip, dir(self.uniform((-105.0, -75.0))), d.thigh);
        let ankle = add(knee, dir(self.uniform((165.0, 195.0))), d.shin);
        let arm_dir = dir(-90.0 + self.uniform((-10.0, 10.0)));
        let elbow = add(shoulder, arm_dir, d.upper_arm);
        let wrist = add(elbow, arm_dir, d.forearm);
        let (head, face) = self.head(shoulder, torso_dir, d.neck, -70.0);
        (Sagittal { shoulder, elbow, wrist, hip, knee, ankle, head, face }, vec![ErrorCode::HipsTooHigh])
    }

    fn render_oblique(&mut self, body: &Body) -> PoseFrame {
        let ox = self.uniform((0.15, 0.35));
        let oy = self.uniform((0.1, 0.25));
        let facing = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let lateral = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
        // image y grows downward; the far (negative z) side appears higher
        let points = body.map(|[x, y, z]| {
            let z = lateral * z;
            (facing * x + ox * z, -y + oy * z)
        });
        let near = if lateral > 0.0 { Side::Left } else { Side::Right };
        self.place(points, near)
    }

    /// Scales and translates meter-space points into the image, assigns
    /// confidences (higher on the `near` side) and applies the noise.
    fn place(&mut self, points: [(f64, f64); NUM_PARTS], near: Side) -> PoseFrame {
        let (w, h) = (self.width as f64, self.height as f64);
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let fill = self.uniform((0.5, 0.85));
        let scale = fill * (w / (x1 - x0)).min(h / (y1 - y0));
        let (bw, bh) = ((x1 - x0) * scale, (y1 - y0) * scale);
        let tx = self.uniform((0.0, w - bw)) - x0 * scale;
        let ty = self.uniform((0.0, h - bh)) - y0 * scale;
        let radius = self.noise * bw.hypot(bh);

        let mut kps = [Keypoint::missing(); NUM_PARTS];
        for (part, (x, y)) in Part::ALL.into_iter().zip(points) {
            let conf = match part.side() {
                Some(s) if s != near => self.uniform((0.5, 0.8)),
                _ => self.uniform((0.8, 1.0)),
            };
            let (mut px, mut py) = (x * scale + tx, y * scale + ty);
            if radius > 0.0 {
                let r = radius * self.rng.random::<f64>().sqrt();
                let a = self.uniform((0.0, 2.0 * PI));
                px += r * a.cos();
                py += r * a.sin();
            }
            kps[part.index()] = Keypoint::detected(px.clamp(0.0, w), py.clamp(0.0, h), conf);
        }
        PoseFrame::from_parts(kps, self.width, self.height, 0, crate::pose::Rotation::None)
    }
}

/// `n` frames of one kind, timestamps `0, 33, 66, ...` ms.
pub fn generate(kind: SynthKind, n: usize, noise: f64, seed: u64) -> Result<Vec<SynthFrame>> {
    let mut gen = SynthGenerator::new(seed, noise)?;
    Ok((0..n)
        .map(|i| {
            let mut s = gen.generate(kind);
            s.frame = s.frame.with_timestamp(i as i64 * 33);
            s
        })
        .collect())
}

/// A noise-free exemplar set with `planks` planks followed by `squats`
/// squats, source ids `plank-0000`, `squat-0000`, ...
pub fn database_frames(planks: usize, squats: usize, seed: u64) -> Vec<LabeledFrame> {
    let mut gen = SynthGenerator::new(seed, 0.0).expect("zero noise is valid");
    let mut out = Vec::with_capacity(planks + squats);
    for (kind, n) in [(SynthKind::Plank, planks), (SynthKind::Squat, squats)] {
        for i in 0..n {
            let s = gen.generate(kind);
            out.push(LabeledFrame { frame: s.frame, label: s.label, source_id: format!("{kind}-{i:04}") });
        }
    }
    out
}

/// Plank and squat corpus for the E-A ratio sweep: `planks` plank frames of
/// which `confounder_share` are bent-knee planks, then `squats` squats.
pub fn sweep_corpus(planks: usize, confounder_share: f64, squats: usize, noise: f64, seed: u64) -> Result<Vec<SynthFrame>> {
    let mut gen = SynthGenerator::new(seed, noise)?;
    let confounders = (planks as f64 * confounder_share).round() as usize;
    let mut out = Vec::with_capacity(planks + squats);
    for i in 0..planks {
        let kind = if i < confounders { SynthKind::PlankWithBentKnees } else { SynthKind::Plank };
        out.push(gen.generate(kind));
    }
    for _ in 0..squats {
        out.push(gen.generate(SynthKind::Squat));
    }
    for (i, s) in out.iter_mut().enumerate() {
        s.frame = s.frame.clone().with_timestamp(i as i64 * 33);
    }
    Ok(out)
}

/// A squat turned about the vertical axis and projected orthographically.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedScene {
    pub frame: PoseFrame,
    pub yaw_deg: f64,
    /// Knee angle of the body in 3D, radians; identical on both sides.
    pub true_knee_angle: f64,
}

/// With yaw 0 the camera looks at the body's left side, with the sagittal
/// plane facing it.
pub fn rotated_squat_scene(gen: &mut SynthGenerator, yaw_deg: f64) -> RotatedScene {
    let d = gen.dims();
    let tilt = gen.uniform((-10.0, 30.0));
    let thigh = gen.uniform((-10.0, 40.0));
    let sagittal = gen.squat_body(&d, tilt, thigh);
    let (c, s) = (yaw_deg.to_radians().cos(), yaw_deg.to_radians().sin());
    let points = sagittal.body().map(|[x, y, z]| (x * c + z * s, -y));
    let near = if s >= 0.0 { Side::Left } else { Side::Right };
    let frame = gen.place(points, near);
    RotatedScene { frame, yaw_deg, true_knee_angle: (90.0 + thigh - tilt).to_radians() }
}

/// `n` scenes with yaw drawn uniformly from `[-max_yaw, max_yaw]` degrees.
pub fn rotated_squat_scenes(n: usize, max_yaw_deg: f64, seed: u64) -> Vec<RotatedScene> {
    let mut gen = SynthGenerator::new(seed, 0.0).expect("zero noise is valid");
    (0..n)
        .map(|_| {
            let yaw = gen.uniform((-max_yaw_deg, max_yaw_deg));
            rotated_squat_scene(&mut gen, yaw)
        })
        .collect()
}
