use thiserror::Error;

use crate::sparse_grid::DyadicPoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid B-spline order {0}: order must be at least 1")]
    InvalidOrder(i64),

    #[error("no builtin mask for order {0} (builtin masks exist for orders 1..=4)")]
    UnsupportedBuiltin(usize),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {0:?} lies outside the unit cube")]
    OutOfDomain(Vec<f64>),

    #[error("value {0} is not a dyadic rational with level <= {max}", max = crate::sparse_grid::MAX_LEVEL)]
    NotDyadic(f64),

    #[error("dyadic index s={s} is outside 0..=2^{level}")]
    IndexOutOfRange { level: u32, s: i64 },

    #[error("function returned non-finite value {value} at canonical point {point}")]
    TaintedSample { point: DyadicPoint, value: f64 },

    #[error("non-finite integrand value {0} encountered during quadrature")]
    TaintedIntegrand(f64),

    #[error("level {0:?} is outside the truncation set")]
    LevelOutOfRange(Vec<u32>),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("rate fit needs at least 4 levels, got {0}")]
    TooFewLevels(usize),

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("sampled data: {0}")]
    SampledData(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
