//! Compressed (sketched) and penalized linear regression.
//!
//! The library fits ridge-type estimators to data that has been compressed
//! by a short sparse random matrix: a `q x n` sparse-Bernoulli sketch `Q`
//! (`q << n`) replaces `(X, Y)` with `(QX, QY)`, after which the whole
//! regularization path, degrees of freedom, and GCV scores come from a
//! single thin SVD of `QX`.
//!
//! Modules:
//!
//! - [`sketch`] — sparse-Bernoulli sketch generation (counter-based,
//!   thread-count-independent), application, and Gram moment diagnostics.
//! - [`estimators`] — OLS, ridge, fully compressed (FC) and partially
//!   compressed (PC) ridge, and their linear/convex combinations along a
//!   λ grid.
//! - [`tuning`] — degrees-of-freedom traces, GCV, a Cp-style risk
//!   estimate, and λ selection.
//! - [`theory`] — closed-form bias/variance oracle for the compressed
//!   estimators, with conditional-on-sketch corrections and
//!   orthogonal-design MSE formulas.
//! - [`sim`] — a reproducible simulation harness comparing the estimators
//!   on synthetic data.
//! - [`linalg`], [`rng`], [`error`] — shared numerical plumbing.
//!
//! Determinism is a design requirement: every random object is a pure
//! function of an explicit seed, and all parallel reductions run in fixed
//! order, so results are bitwise identical at any thread count.

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod rng;
pub mod sim;
pub mod sketch;
pub mod theory;
pub mod tuning;

pub use error::{Error, Result};
pub use estimators::{
    build_compressed, fit_combo, fit_fc, fit_ols, fit_path, fit_pc, fit_ridge, predict,
    CompressedDesign, Dataset, FitResult, Method, PathOptions,
};
pub use linalg::{thin_svd, ThinSvd};
pub use sketch::{apply_sketch, apply_sketch_vec, generate_sketch, SketchSpec, SparseSketch};
pub use tuning::{default_lambda_grid, gcv, risk_cp, select_lambda, Criterion, TuningRecord};
