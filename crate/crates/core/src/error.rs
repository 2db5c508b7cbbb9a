use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("coordinate {value} on axis {axis} lies outside [0,1]")]
    OutsideUnitCube { axis: usize, value: String },

    #[error("cube coordinate {coord} on axis {axis} is out of range for level {level}")]
    InvalidCube { level: u32, axis: usize, coord: u64 },

    #[error("level {level} exceeds the supported maximum {max}")]
    LevelTooDeep { level: u64, max: u64 },

    #[error("level {level} is beyond the tree depth {depth}")]
    BeyondDepth { level: u32, depth: u32 },

    #[error("weight at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize },

    #[error("weights sum to {sum}, expected exactly 1")]
    NotNormalized { sum: String },

    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("invalid mass tree: {0}")]
    InvalidTree(String),

    #[error("mixed exact and log2 masses in one computation")]
    ModeMismatch,

    #[error("no charged cube at level {level}; the partition sum is undefined")]
    UndefinedPartitionSum { level: u32 },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectrum curve has no samples")]
    EmptyCurve,

    #[error("curve abscissas are not strictly increasing at sample {index}")]
    UnsortedCurve { index: usize },

    #[error("schedule has no levels")]
    EmptySchedule,

    #[error("generation {generation} has no admissible child ball (degenerate schedule)")]
    DegenerateSchedule { generation: usize },

    #[error("object too large to materialize: {0}")]
    TooLarge(String),

    #[error("numeric transport solve failed: duality gap {gap:e} exceeds {limit:e}")]
    Certificate { gap: f64, limit: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;
