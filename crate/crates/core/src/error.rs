use thiserror::Error;

/// Which regression direction an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Hz,
    Vt,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Hz => write!(f, "HZ"),
            Side::Vt => write!(f, "VT"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing cell for unit {unit:?} at time {time:?}")]
    MissingCell { unit: String, time: String },
    #[error("duplicate cell for unit {unit:?} at time {time:?}")]
    DuplicateCell { unit: String, time: String },
    #[error("treated unit {0:?} not found in panel")]
    UnknownTreatedUnit(String),
    #[error("t0 = {t0} out of range for T = {t} periods")]
    T0OutOfRange { t0: usize, t: usize },
    #[error("period index {period} is before treatment (t0 = {t0})")]
    PeriodBeforeTreatment { period: usize, t0: usize },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("k = {k} out of range (rank = {rank})")]
    KOutOfRange { k: usize, rank: usize },
    #[error("penalty must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("solver did not converge within {0} iterations")]
    NotConverged(usize),
    #[error("method does not support this operation")]
    UnsupportedMethod,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0} homoskedastic variance is degenerate (denominator is zero)")]
    DegenerateSide(Side),
    #[error("HRK system for the {0} side is numerically singular")]
    HrkUndefined(Side),
    #[error("variance must be nonnegative, got {0}")]
    NegativeVariance(f64),
    #[error("no valid cells to average")]
    EmptyAverage,
    #[error("DGP is degenerate: effective rank {r} leaves no residual degrees of freedom")]
    DegenerateDgp { r: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
