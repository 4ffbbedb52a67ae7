use thiserror::Error;

/// Errors shared across the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcfError {
    #[error("ROI lies fully outside the image bounds")]
    RoiOutOfImage,
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("mask weights sum to zero: no seed inside mask")]
    EmptyMask,
    #[error("no seed passed the validity and mask threshold")]
    NoValidSeeds,
    #[error("axis is degenerate: {0}")]
    DegenerateAxis(String),
    #[error("RANSAC found no hypothesis reaching the inlier fraction {0}")]
    RansacFailure(f64),
    #[error("direction is degenerate: {0}")]
    DegenerateDirection(String),
    #[error("gripper frame is degenerate: {0}")]
    DegenerateFrame(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("input vector has near-zero norm")]
    ZeroVector,
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}
