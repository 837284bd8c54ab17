//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by sketch generation, fitting, tuning, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a basic precondition (non-finite entries, empty
    /// shapes, malformed grids).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A solve that requires full numerical rank was attempted on a
    /// rank-deficient system (typically `lambda = 0` with a singular Gram).
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// Sparsity parameter out of range: `s` must be a real number >= 1.
    #[error("invalid sparsity: s must be >= 1 and finite, got {0}")]
    InvalidSparsity(f64),

    /// A diagnostic that materializes n^2-sized moment estimates was asked
    /// to run at an n it is not meant for.
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    /// Penalty parameter out of range for the requested operation.
    #[error("invalid lambda: {0}")]
    InvalidLambda(String),

    /// GCV is undefined because the fit is saturated (`df >= n`).
    #[error("degenerate GCV: df = {df} >= n = {n}")]
    DegenerateGcv { df: f64, n: usize },

    /// Every candidate on the grid was degenerate under the criterion.
    #[error("no valid lambda: every candidate record was degenerate")]
    NoValidLambda,

    /// Simulation configuration violates its invariants.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
