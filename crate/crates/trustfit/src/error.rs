//! Error type shared by the whole crate.

use thiserror::Error;

/// Everything that can go wrong while preparing or running a fit.
///
/// Runtime numeric trouble inside the solver loop (a trial point where the
/// model stops being finite, an SVD that will not settle) is reported through
/// [`FitStatus::NumericFailure`](crate::solver::FitStatus) instead, so the
/// caller keeps the last good iterate. `Error` is reserved for inputs the
/// solver cannot start from.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Model output was NaN or infinite at a data point.
    #[error("model evaluation produced a non-finite value at data point {point}")]
    EvaluationFailure { point: usize },

    /// A partial derivative came out non-finite at a data point.
    #[error("derivative w.r.t. parameter {parameter} is non-finite at data point {point}")]
    DerivativeFailure { point: usize, parameter: usize },

    /// Independent and dependent data lengths disagree.
    #[error("dataset has {y_len} points but {z_len} observed values")]
    DataLengthMismatch { y_len: usize, z_len: usize },

    /// Dataset contains NaN or infinity.
    #[error("dataset entry {index} of `{field}` is not finite")]
    NonFiniteData { field: &'static str, index: usize },

    /// Fewer data points than model parameters.
    #[error("{points} data points cannot determine {parameters} parameters")]
    Underdetermined { points: usize, parameters: usize },

    /// Seed vector length does not match the model's parameter count.
    #[error("model expects {expected} parameters, seed has {actual}")]
    ArityMismatch { expected: usize, actual: usize },

    /// Jacobi SVD failed to orthogonalize within the sweep budget.
    #[error("SVD did not converge within {sweeps} sweeps")]
    SvdNonConvergence { sweeps: usize },

    /// Cholesky pivot was zero or negative.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// Triangular solve hit a zero diagonal entry.
    #[error("triangular factor is singular at diagonal entry {index}")]
    SingularFactor { index: usize },

    /// Matrix dimensions do not line up for the requested operation.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: &'static str },

    /// Requested padded size is smaller than the number of real points.
    #[error("fixed size {fixed} cannot hold {actual} data points")]
    FixedSizeExceeded { fixed: usize, actual: usize },

    /// Weight vector or covariance entries violate their contract.
    #[error("invalid weights: {reason}")]
    InvalidWeights { reason: &'static str },

    /// Weight length disagrees with the dataset.
    #[error("weights cover {weights} points but dataset has {points}")]
    WeightLengthMismatch { weights: usize, points: usize },

    /// Dense covariance whitening refused above the configured size cap.
    #[error("covariance side {v} exceeds the dense-storage limit {limit}")]
    CovarianceTooLarge { v: usize, limit: usize },

    /// Full covariance cannot be combined with fixed-size padding.
    #[error("full covariance weighting does not support fixed-size padding")]
    CovarianceWithPadding,

    /// Datagen spec field failed validation.
    #[error("invalid generation spec: {reason}")]
    InvalidSpec { reason: &'static str },

    /// Fit options failed validation.
    #[error("invalid fit options: {reason}")]
    InvalidOptions { reason: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
