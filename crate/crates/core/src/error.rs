use thiserror::Error;

use crate::capacity::MaxMinResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("negative eigenvalue {value:e} below the clamp threshold")]
    NegativeEigenvalue { value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("product dimension {dim} exceeds the cap of {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },

    #[error("branch probability {prob:e} is too small for a posterior state")]
    ZeroProbabilityBranch { prob: f64 },

    #[error("POVM elements do not sum to identity (max deviation {deviation:e})")]
    IncompletePovm { deviation: f64 },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("symbol {symbol} is outside the alphabet of slot {slot} (size {size})")]
    SymbolOutOfAlphabet { slot: usize, symbol: usize, size: usize },

    #[error("slot {slot} out of range for a {k}-sender channel")]
    SlotOutOfRange { slot: usize, k: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("distribution not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("branch weights are not a distribution (sum = {sum})")]
    WeightNotNormalized { sum: f64 },

    #[error("optimizer budget exhausted (gap {:e} after {} evaluations)", .0.gap, .0.evals)]
    BudgetExhausted(Box<MaxMinResult>),

    #[error("no stage POVM supplied for decode stage {stage}")]
    MissingStagePovm { stage: usize },

    #[error("k = {k} exceeds the supported maximum of {max}")]
    KTooLarge { k: usize, max: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("ensemble average is numerically zero")]
    DegenerateEnsemble,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
