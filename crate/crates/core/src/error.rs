use thiserror::Error;

use crate::params::ParamRejection;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("cartesian grids need a power-of-two point count >= 16, got {0}")]
    BadPointCount(usize),
    #[error("radial grids need at least 16 points, got {0}")]
    TooFewRadialPoints(usize),
    #[error("unsupported dimension {dimension} for {mode} grids")]
    UnsupportedDimension { dimension: usize, mode: &'static str },
    #[error("extent must be positive and finite, got {0}")]
    BadExtent(f64),
    #[error("radial stretch exponent must be 1 or 2, got {0}")]
    BadStretch(u32),
    #[error("field has {got} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("sobolev index {0} outside [0, 1]")]
    SobolevIndex(f64),
    #[error("littlewood-paley cutoff must be positive, got {0}")]
    BadCutoff(f64),
    #[error("regularization radius must be positive, got {0}")]
    BadRegularization(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundStateError {
    #[error("petviashvili iteration did not converge after {iterations} iterations (|m-1| = {factor_gap:e}, residual = {residual:e})")]
    NotConverged {
        iterations: usize,
        factor_gap: f64,
        residual: f64,
    },
    #[error("iteration collapsed to zero at iteration {iteration} (L2 norm {norm:e})")]
    Collapsed { iteration: usize, norm: f64 },
    #[error("iteration produced a non-finite value at iteration {0}")]
    NonFinite(usize),
    #[error("invalid ground-state problem: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("non-finite field value at t = {time}")]
    NonFinite { time: f64 },
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown grid mode byte {0}")]
    UnknownMode(u8),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Crate-level error for callers that chain several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseRationalError),
    #[error("parameters rejected: {0}")]
    Params(#[from] ParamRejection),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    GroundState(#[from] GroundStateError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
