use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (pivot {pivot:e} below threshold {threshold:e})")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("eigenvector matrix is ill-conditioned (condition estimate {condition:e})")]
    DefectiveMatrix { condition: f64 },

    #[error("matrix exponential overflows; use the rescaled closed-form path or a larger lambda")]
    Overflow,

    #[error("integrand returned a non-finite value at t = {t}")]
    NonFiniteSample { t: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("exponential basis is degenerate for k = {k} (|det B| relative size {relative_det:e})")]
    DegenerateBasis { k: f64, relative_det: f64 },

    #[error("invalid order {order}: {reason}")]
    InvalidOrder { order: usize, reason: &'static str },

    #[error("shooting system is singular")]
    ShootingSingular,

    #[error("lambda = {lambda:e} outside the accepted range {range}")]
    LambdaOutOfRange { lambda: f64, range: &'static str },

    #[error(
        "lambda = {lambda:e} is below the floor {floor:e} of the generic flow solver; use the analytic order-1 path"
    )]
    LambdaBelowFloor { lambda: f64, floor: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("independent evaluation paths disagree: {0}")]
    CrossCheck(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::NoConvergence => "NoConvergence",
            Error::DefectiveMatrix { .. } => "DefectiveMatrix",
            Error::Overflow => "Overflow",
            Error::NonFiniteSample { .. } => "NonFiniteSample",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::DegenerateBasis { .. } => "DegenerateBasis",
            Error::InvalidOrder { .. } => "InvalidOrder",
            Error::ShootingSingular => "ShootingSingular",
            Error::LambdaOutOfRange { .. } => "LambdaOutOfRange",
            Error::LambdaBelowFloor { .. } => "LambdaBelowFloor",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NonFiniteEntry { .. } => "NonFiniteEntry",
            Error::CrossCheck(_) => "CrossCheck",
        }
    }
}
