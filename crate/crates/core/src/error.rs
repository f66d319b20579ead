use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("input contains NaN or infinite entries")]
    NonFinite,
    #[error("{m} receive antennas cannot separate {k} users (need m >= k)")]
    Underdetermined { m: usize, k: usize },
    #[error("matrix is rank deficient (column {0})")]
    RankDeficient(usize),
    #[error("unsupported constellation order {0} (expected 4, 16 or 64)")]
    UnsupportedOrder(usize),
    #[error("{0} is not a point of the constellation")]
    NotAConstellationPoint(String),
    #[error("noise level must be strictly positive")]
    ZeroNoise,
    #[error("exhaustive search over {vectors} symbol vectors exceeds the limit of {limit}")]
    TooLarge { vectors: f64, limit: usize },
    #[error("regularized Gram matrix is singular")]
    Singular,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("measured {measured} real multiplications exceeds the bound {bound}")]
    ComplexityBoundExceeded { measured: u64, bound: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
