use thiserror::Error;

/// Errors raised by the solver, oracles and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("AffineSumViolation: weights sum to {sum}, expected 1")]
    AffineSumViolation { sum: f64 },
    #[error("ZeroWeight: weight at input position {index} is zero")]
    ZeroWeight { index: usize },
    #[error("NoPositiveWeight: at least one weight must be positive")]
    NoPositiveWeight,
    #[error("OffGridSample: row {row} at {coords:?} is not within half a cell of a grid node")]
    OffGridSample { row: usize, coords: Vec<f64> },
    #[error("NegativeMass: row {row} carries negative weight {weight}")]
    NegativeMass { row: usize, weight: f64 },
    #[error("EmptyInput: no mass to ingest")]
    EmptyInput,
    #[error("MeanOutsideDomain: mean {mean:?} lies outside the grid box")]
    MeanOutsideDomain { mean: Vec<f64> },
    #[error("NotInvertible: twist inverse at {x:?} lands outside the box at {y:?}")]
    NotInvertible { x: [f64; 2], y: [f64; 2] },
    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("InvalidMeasure: {0}")]
    InvalidMeasure(String),
    #[error("InvalidCost: {0}")]
    InvalidCost(String),
    #[error("InvalidProblem: {0}")]
    InvalidProblem(String),
    #[error(
        "DomainTooSmall: {fraction:.4} of the mass was mapped outside the box; enlarge the grid box"
    )]
    DomainTooSmall { fraction: f64 },
    #[error("Diverged at sweep {iterate}: {reason}")]
    Diverged { iterate: usize, reason: String },
    #[error("OnePositiveWeight: a single positive weight is handled by the oracle path")]
    OnePositiveWeight,
    #[error("OnePositiveWeightRequired: found {count} positive weights")]
    OnePositiveWeightRequired { count: usize },
    #[error("TooManyAtoms: {count} atoms exceeds the limit of {limit}")]
    TooManyAtoms { count: usize, limit: usize },
    #[error("EngineUnavailable: {0}")]
    EngineUnavailable(String),
    #[error("NotQuadraticCost: this check needs the quadratic cost")]
    NotQuadraticCost,
    #[error("MaxIters: stopped after {iterations} iterations with residual {residual:e}")]
    MaxIters { iterations: usize, residual: f64 },
    #[error("Parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
