use thiserror::Error;

/// Errors raised anywhere in the grasp pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth {depth} at pixel ({u}, {v})")]
    InvalidDepth { u: f64, v: f64, depth: f64 },
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds {
        u: f64,
        v: f64,
        width: usize,
        height: usize,
    },
    #[error("mask has no set pixels")]
    EmptyMask,
    #[error("degenerate mask: {valid} pixels with valid depth, at least 5 required")]
    DegenerateMask { valid: usize },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("image buffer of length {len} does not match {width}x{height}")]
    ImageShape {
        len: usize,
        width: usize,
        height: usize,
    },
    #[error("could not place object {placed} of {requested} after {attempts} rejections")]
    PlacementFailure {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("waypoint {index} at ({x:.3}, {y:.3}, {z:.3}) leaves the workspace")]
    WorkspaceViolation {
        index: usize,
        x: f64,
        y: f64,
        z: f64,
    },
    #[error("plan has no waypoints")]
    EmptyPlan,
    #[error("outcome log is empty")]
    EmptyLog,
    #[error("point cloud has {n} points, at least {min} required")]
    TooFewPoints { n: usize, min: usize },
    #[error("point cloud has zero spatial extent")]
    DegenerateCloud,
    #[error("batch of {len} projections cannot be split into positive pairs")]
    BatchShape { len: usize },
    #[error("training diverged at epoch {epoch}, step {step}")]
    Divergence { epoch: usize, step: usize },
    #[error("demonstration has {count} waypoints, expected 2 to 9")]
    WaypointCount { count: usize },
    #[error("trajectory has zero length")]
    DegenerateTrajectory,
    #[error("point cloud lacks centroid/scale metadata")]
    MissingMetadata,
    #[error("no initial grasp and no applicable demonstration")]
    NoGraspAvailable,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed document: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
