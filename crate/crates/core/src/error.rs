use crate::pose::Part;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("keypoint {0:?} is missing")]
    MissingKeypoint(Part),
    #[error("zero-length ray at vertex {0:?}")]
    DegenerateRay(Part),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("unknown pose label {0:?}")]
    UnknownLabel(String),
    #[error("frame cannot be completed, still missing {missing:?}")]
    UnfillableFrame { missing: Vec<Part> },
    #[error("keypoint bounding box has zero area")]
    DegenerateBoundingBox,
    #[error("all test-side confidences are zero")]
    ZeroConfidence,
    #[error("E-A ratio must be positive, got {0}")]
    InvalidRatio(f64),
    #[error("pose database is empty")]
    EmptyDatabase,
    #[error("duplicate exemplar source id {0:?}")]
    DuplicateSource(String),
    #[error("invalid feature vector: {0}")]
    InvalidVector(String),
    #[error("invalid rule parameters: {0}")]
    InvalidParams(String),
    #[error("thigh has zero length")]
    DegenerateThigh,
    #[error("back quad does not determine a projection (collinear or repeated points)")]
    RankDeficient,
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("unsupported database schema version {0}")]
    UnsupportedSchema(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
