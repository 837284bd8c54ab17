//! The estimator family: OLS, ridge, fully compressed (FC) ridge, partially
//! compressed (PC) ridge, and their linear/convex combinations.
//!
//! Everything downstream of a sketch is driven by one thin SVD of `QX`
//! (`build_compressed`), after which each fit along a λ grid costs
//! `O(p^2 + n p)` — the `n p` being the combination projections.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, SpectralShrinker, ThinSvd};
use crate::sketch::{apply_sketch, apply_sketch_vec, SketchSpec, SparseSketch};
use crate::tuning;

/// The estimator family, in canonical order (used for deterministic
/// tie-breaking and stable report layouts).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Ordinary least squares (minimum-norm).
    Ols,
    /// Uncompressed ridge.
    Ridge,
    /// Fully compressed ridge.
    Fc,
    /// Partially compressed ridge.
    Pc,
    /// Unconstrained linear combination of FC and PC.
    ComboLinear,
    /// Convex combination of FC and PC.
    ComboConvex,
}

impl Method {
    /// All methods in canonical order.
    pub const ALL: [Method; 6] = [
        Method::Ols,
        Method::Ridge,
        Method::Fc,
        Method::Pc,
        Method::ComboLinear,
        Method::ComboConvex,
    ];

    /// Stable snake_case name (matches the serialized form).
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Ridge => "ridge",
            Method::Fc => "fc",
            Method::Pc => "pc",
            Method::ComboLinear => "combo_linear",
            Method::ComboConvex => "combo_convex",
        }
    }

    /// Parses a method name (the inverse of [`Method::name`]).
    pub fn parse(name: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == name)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown method {name:?}; expected one of ols, ridge, fc, pc, \
                     combo_linear, combo_convex"
                ))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Row-block width for the streamed `X^T X` / `X^T Y` pass. Fixed so the
/// block partition (and hence the floating-point result) never depends on
/// thread count.
const GRAM_BLOCK: usize = 256;

/// A fixed design with its response.
#[derive(Clone, Debug)]
pub struct Dataset {
    /// Design matrix, `n x p`.
    pub x: DMatrix<f64>,
    /// Response vector, length `n`.
    pub y: DVector<f64>,
}

impl Dataset {
    /// Builds a validated dataset (finite entries, consistent shapes).
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidInput(
                "dataset: X must have at least one row and one column".into(),
            ));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "dataset: X has {} rows but Y has length {}",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset: non-finite entries".into()));
        }
        Ok(Self { x, y })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of predictors.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Everything the λ path needs, precomputed from one pass over the data and
/// one thin SVD of `QX`.
#[derive(Clone, Debug)]
pub struct CompressedDesign {
    /// Thin SVD of `QX` (left `S`, singular values `L`, right `R`).
    pub qx_svd: ThinSvd,
    /// `X^T Y`.
    pub xty: DVector<f64>,
    /// `(QX)^T (QY)`.
    pub qxt_qy: DVector<f64>,
    /// `R^T (X^T X) R`, needed by the PC degrees-of-freedom trace.
    pub rtxxr: DMatrix<f64>,
    /// `tr(X^T X)`.
    pub trace_xx: f64,
    /// The sketch that produced the compression.
    pub spec: SketchSpec,
}

/// One λ grid point with every estimator evaluated at it.
#[derive(Clone, Debug)]
pub struct FitResult {
    /// Penalty level.
    pub lambda: f64,
    /// Fully compressed ridge coefficients.
    pub beta_fc: DVector<f64>,
    /// Partially compressed ridge coefficients.
    pub beta_pc: DVector<f64>,
    /// Uncompressed ridge coefficients, when requested.
    pub beta_ridge: Option<DVector<f64>>,
    /// Unconstrained (linear) combination coefficients.
    pub beta_combo_linear: DVector<f64>,
    /// Convex combination coefficients.
    pub beta_combo_convex: DVector<f64>,
    /// Unconstrained combination weights, ordered (FC, PC).
    pub alpha_linear: [f64; 2],
    /// Convex combination weight on FC (weight on PC is `1 - alpha`).
    pub alpha_convex: f64,
    /// Degrees of freedom of the FC fit.
    pub df_fc: f64,
    /// Degrees of freedom of the PC fit (may exceed `p`; the PC hat matrix
    /// is not a contraction).
    pub df_pc: f64,
    /// Plug-in degrees of freedom of the linear combination.
    pub df_combo_linear: f64,
    /// Plug-in degrees of freedom of the convex combination.
    pub df_combo_convex: f64,
    /// Ridge degrees of freedom, when ridge was requested.
    pub df_ridge: Option<f64>,
    /// Residual sums of squares.
    pub rss_fc: f64,
    /// RSS of the PC fit.
    pub rss_pc: f64,
    /// RSS of the ridge fit, when requested.
    pub rss_ridge: Option<f64>,
    /// RSS of the linear combination.
    pub rss_combo_linear: f64,
    /// RSS of the convex combination.
    pub rss_combo_convex: f64,
}

/// Options for [`fit_path`].
#[derive(Clone, Copy, Debug, Default)]
pub struct PathOptions {
    /// Also fit uncompressed ridge at every grid point (adds one thin SVD
    /// of `X`).
    pub with_ridge: bool,
}

/// A λ path: one [`FitResult`] per grid point, in grid order.
pub type PathResult = Vec<FitResult>;

/// Streams `X^T X` and `X^T Y` over fixed row blocks.
///
/// The partition is fixed at [`GRAM_BLOCK`] rows and the block results are
/// folded in block order, so the output is bitwise independent of thread
/// count.
pub fn streamed_cross_products(x: &DMatrix<f64>, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows();
    let p = x.ncols();
    let blocks: Vec<(DMatrix<f64>, DVector<f64>)> = (0..n.div_ceil(GRAM_BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * GRAM_BLOCK;
            let len = GRAM_BLOCK.min(n - lo);
            let xb = x.rows(lo, len);
            let yb = y.rows(lo, len);
            (xb.transpose() * xb, xb.transpose() * yb)
        })
        .collect();
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    for (g, v) in blocks {
        xtx += g;
        xty += v;
    }
    (xtx, xty)
}

/// Minimum-norm least squares via the pseudoinverse on the numerical rank.
pub fn fit_ols(data: &Dataset) -> Result<DVector<f64>> {
    let svd = thin_svd(&data.x)?;
    let k = svd.rank();
    let mut beta = DVector::zeros(data.p());
    for j in 0..k {
        let uj_y = svd.left.column(j).dot(&data.y);
        beta.axpy(
            uj_y / svd.singvals[j],
            &svd.right.column(j).into_owned(),
            1.0,
        );
    }
    Ok(beta)
}

/// Ridge coefficients from a precomputed thin SVD of `X`.
///
/// # Errors
///
/// `InvalidLambda` when `lambda` is negative or non-finite;
/// `SingularSystem` when `lambda = 0` and `X` is numerically rank-deficient
/// (use [`fit_ols`] for the minimum-norm solution instead).
pub fn ridge_from_svd(x_svd: &ThinSvd, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidLambda(format!(
            "ridge requires lambda >= 0, got {lambda}"
        )));
    }
    if y.len() != x_svd.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "ridge: X has {} rows but Y has length {}",
            x_svd.nrows(),
            y.len()
        )));
    }
    if lambda == 0.0 && !x_svd.full_column_rank() {
        return Err(Error::SingularSystem(
            "lambda = 0 with rank-deficient X; use fit_ols".into(),
        ));
    }
    let factors = SpectralShrinker::new(x_svd.singvals.clone(), lambda)?.shrink_factors();
    let uty = x_svd.left.transpose() * y;
    let mut beta = DVector::zeros(x_svd.ncols());
    for j in 0..x_svd.r() {
        beta.axpy(
            factors[j] * uty[j],
            &x_svd.right.column(j).into_owned(),
            1.0,
        );
    }
    Ok(beta)
}

/// Ridge regression `argmin ||Y - X b||^2 + lambda ||b||^2`.
///
/// See [`ridge_from_svd`] for the error contract.
pub fn fit_ridge(data: &Dataset, lambda: f64) -> Result<DVector<f64>> {
    let svd = thin_svd(&data.x)?;
    ridge_from_svd(&svd, &data.y, lambda)
}

/// Precomputes the compressed design: `QX` and its thin SVD, the
/// cross-products `X^T Y` and `(QX)^T (QY)`, and the `R^T X^T X R` /
/// `tr(X^T X)` pieces the PC degrees-of-freedom trace needs.
///
/// # Errors
///
/// `DimensionMismatch` when the sketch width differs from `n`.
pub fn build_compressed(data: &Dataset, sketch: &SparseSketch) -> Result<CompressedDesign> {
    let qx = apply_sketch(sketch, &data.x)?;
    let qy = apply_sketch_vec(sketch, &data.y)?;
    let qx_svd = thin_svd(&qx)?;
    let qxt_qy = qx.transpose() * &qy;
    let (xtx, xty) = streamed_cross_products(&data.x, &data.y);
    let xtx_r = &xtx * &qx_svd.right;
    let mut rtxxr = qx_svd.right.transpose() * xtx_r;
    // Enforce exact symmetry; the product is symmetric only to rounding.
    let transposed = rtxxr.transpose();
    rtxxr = (rtxxr + transposed) * 0.5;
    Ok(CompressedDesign {
        qx_svd,
        xty,
        qxt_qy,
        rtxxr,
        trace_xx: xtx.trace(),
        spec: sketch.spec,
    })
}

/// Fully compressed ridge: `(X^T Q^T Q X + lambda I)^{-1} X^T Q^T Q Y`.
///
/// Computed as `R (L^2 + lambda I)^{-1} R^T (QX)^T (QY)`; the complement
/// term of the regularized inverse vanishes identically because
/// `X^T Q^T Q Y` lies in the span of `R` (asserted in debug builds).
///
/// # Errors
///
/// `InvalidLambda` when `lambda` is negative or non-finite;
/// `SingularSystem` when `lambda = 0` and `QX` is numerically
/// rank-deficient.
pub fn fit_fc(cd: &CompressedDesign, lambda: f64) -> Result<DVector<f64>> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidLambda(format!(
            "fit_fc requires lambda >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 && !cd.qx_svd.full_column_rank() {
        return Err(Error::SingularSystem(
            "fit_fc at lambda = 0 requires QX to have full column rank".into(),
        ));
    }
    let r_mat = &cd.qx_svd.right;
    let coords = r_mat.transpose() * &cd.qxt_qy;
    let complement_norm = (&cd.qxt_qy - r_mat * &coords).norm();
    debug_assert!(
        complement_norm <= 1e-8 * (1.0 + cd.qxt_qy.norm()),
        "X^T Q^T Q Y left the span of R (residual {complement_norm:.3e})"
    );
    let inv = SpectralShrinker::new(cd.qx_svd.singvals.clone(), lambda)?.inverse_factors();
    let scaled = DVector::from_fn(coords.len(), |j, _| coords[j] * inv[j]);
    Ok(r_mat * scaled)
}

/// Partially compressed ridge: `(X^T Q^T Q X + lambda I)^{-1} X^T Y`.
///
/// Unlike FC, `X^T Y` need not lie in the span of `R`, so the complement
/// term `lambda^{-1} (I - R R^T) X^T Y` is required whenever `QX` has fewer
/// than `p` singular values.
///
/// # Errors
///
/// `InvalidLambda` when `lambda <= 0` or non-finite — the PC system is
/// guaranteed invertible only for strictly positive penalties.
pub fn fit_pc(cd: &CompressedDesign, lambda: f64) -> Result<DVector<f64>> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidLambda(format!(
            "fit_pc requires lambda > 0, got {lambda}"
        )));
    }
    crate::linalg::regularized_inverse_apply(&cd.qx_svd, lambda, &cd.xty)
}

/// Convex combination weight `alpha` on FC (the PC weight is `1 - alpha`):
/// the minimizer of `||Y - alpha v_FC - (1-alpha) v_PC||^2` over `[0, 1]`.
///
/// When the two fitted vectors coincide (to relative rounding tolerance)
/// every weight is optimal and the tie breaks to `1/2`.
pub fn combo_weights_convex(y: &DVector<f64>, v_fc: &DVector<f64>, v_pc: &DVector<f64>) -> f64 {
    let diff = v_fc - v_pc;
    let denom = diff.norm_squared();
    let scale = v_fc.norm_squared().max(v_pc.norm_squared());
    if denom <= 1e-24 * scale {
        return 0.5;
    }
    let alpha = (y - v_pc).dot(&diff) / denom;
    alpha.clamp(0.0, 1.0)
}

/// Unconstrained combination weights, ordered (FC, PC): the least squares
/// solution of `Y ~ [v_FC, v_PC]`, minimum-norm when the 2x2 normal matrix
/// is singular.
pub fn combo_weights_linear(
    y: &DVector<f64>,
    v_fc: &DVector<f64>,
    v_pc: &DVector<f64>,
) -> [f64; 2] {
    let g = DMatrix::from_row_slice(
        2,
        2,
        &[
            v_fc.norm_squared(),
            v_fc.dot(v_pc),
            v_pc.dot(v_fc),
            v_pc.norm_squared(),
        ],
    );
    let c = DVector::from_vec(vec![v_fc.dot(y), v_pc.dot(y)]);
    // Minimum-norm solve of the normal equations: (B^T B)^+ B^T Y = B^+ Y.
    let svd = thin_svd(&g).expect("2x2 Gram of finite vectors is finite");
    let k = svd.rank();
    let mut alpha = DVector::zeros(2);
    for j in 0..k {
        let coef = svd.left.column(j).dot(&c) / svd.singvals[j];
        alpha.axpy(coef, &svd.right.column(j).into_owned(), 1.0);
    }
    [alpha[0], alpha[1]]
}

/// Combination estimator `B(lambda) alpha` with `B = [beta_FC, beta_PC]`.
///
/// `constrained = true` restricts to convex weights `(alpha, 1 - alpha)`
/// with the closed-form projection; `constrained = false` solves the
/// unconstrained two-dimensional least squares problem. Returns the weights
/// (ordered FC, PC) and the combined coefficient vector.
///
/// # Errors
///
/// Whatever [`fit_fc`]/[`fit_pc`] raise; `lambda > 0` is required.
pub fn fit_combo(
    cd: &CompressedDesign,
    data: &Dataset,
    lambda: f64,
    constrained: bool,
) -> Result<([f64; 2], DVector<f64>)> {
    let beta_fc = fit_fc(cd, lambda)?;
    let beta_pc = fit_pc(cd, lambda)?;
    let v_fc = &data.x * &beta_fc;
    let v_pc = &data.x * &beta_pc;
    let alpha = if constrained {
        let a = combo_weights_convex(&data.y, &v_fc, &v_pc);
        [a, 1.0 - a]
    } else {
        combo_weights_linear(&data.y, &v_fc, &v_pc)
    };
    let beta = &beta_fc * alpha[0] + &beta_pc * alpha[1];
    Ok((alpha, beta))
}

/// Fitted values `Xnew * beta`.
///
/// # Errors
///
/// `DimensionMismatch` when the column count disagrees with `beta`.
pub fn predict(beta: &DVector<f64>, xnew: &DMatrix<f64>) -> Result<DVector<f64>> {
    if xnew.ncols() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "predict: {} columns vs coefficient length {}",
            xnew.ncols(),
            beta.len()
        )));
    }
    Ok(xnew * beta)
}

/// Evaluates every estimator along a λ grid from the one precomputed SVD.
///
/// The grid must be strictly positive, finite, and sorted ascending. Grid
/// points are independent and evaluated in parallel; results are returned
/// in grid order and match per-λ fresh fits exactly.
///
/// # Errors
///
/// `InvalidInput` on an empty or unsorted grid; `InvalidLambda` on
/// nonpositive grid entries.
pub fn fit_path(
    cd: &CompressedDesign,
    data: &Dataset,
    lambdas: &[f64],
    options: &PathOptions,
) -> Result<PathResult> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("fit_path: empty lambda grid".into()));
    }
    for pair in lambdas.windows(2) {
        if pair[0] > pair[1] {
            return Err(Error::InvalidInput(
                "fit_path: lambda grid must be sorted ascending".into(),
            ));
        }
    }
    if let Some(&bad) = lambdas.iter().find(|l| !l.is_finite() || **l <= 0.0) {
        return Err(Error::InvalidLambda(format!(
            "fit_path requires strictly positive lambdas, got {bad}"
        )));
    }
    let x_svd = if options.with_ridge {
        Some(thin_svd(&data.x)?)
    } else {
        None
    };
    lambdas
        .par_iter()
        .map(|&lambda| fit_at_lambda(cd, data, lambda, x_svd.as_ref()))
        .collect()
}

/// One grid point of [`fit_path`]; shared with the fresh-fit entry points.
fn fit_at_lambda(
    cd: &CompressedDesign,
    data: &Dataset,
    lambda: f64,
    x_svd: Option<&ThinSvd>,
) -> Result<FitResult> {
    let n = data.n() as f64;
    let _ = n;
    let beta_fc = fit_fc(cd, lambda)?;
    let beta_pc = fit_pc(cd, lambda)?;
    let v_fc = &data.x * &beta_fc;
    let v_pc = &data.x * &beta_pc;

    let a_cvx = combo_weights_convex(&data.y, &v_fc, &v_pc);
    let alpha_convex = [a_cvx, 1.0 - a_cvx];
    let alpha_linear = combo_weights_linear(&data.y, &v_fc, &v_pc);

    let beta_combo_convex = &beta_fc * alpha_convex[0] + &beta_pc * alpha_convex[1];
    let beta_combo_linear = &beta_fc * alpha_linear[0] + &beta_pc * alpha_linear[1];
    let v_cvx = &v_fc * alpha_convex[0] + &v_pc * alpha_convex[1];
    let v_lin = &v_fc * alpha_linear[0] + &v_pc * alpha_linear[1];

    let df_fc = tuning::df_fc(cd, lambda)?;
    let df_pc = tuning::df_pc(cd, lambda)?;
    let df_combo_linear = tuning::df_combo(df_fc, df_pc, alpha_linear);
    let df_combo_convex = tuning::df_combo(df_fc, df_pc, alpha_convex);

    let (beta_ridge, df_ridge, rss_ridge) = match x_svd {
        Some(svd) => {
            let beta_r = ridge_from_svd(svd, &data.y, lambda)?;
            let df_r: f64 = svd
                .singvals
                .iter()
                .map(|&d| {
                    let d2 = d * d;
                    if d2 + lambda > 0.0 {
                        d2 / (d2 + lambda)
                    } else {
                        0.0
                    }
                })
                .sum();
            let rss_r = (&data.y - &data.x * &beta_r).norm_squared();
            (Some(beta_r), Some(df_r), Some(rss_r))
        }
        None => (None, None, None),
    };

    Ok(FitResult {
        lambda,
        rss_fc: (&data.y - &v_fc).norm_squared(),
        rss_pc: (&data.y - &v_pc).norm_squared(),
        rss_combo_linear: (&data.y - &v_lin).norm_squared(),
        rss_combo_convex: (&data.y - &v_cvx).norm_squared(),
        beta_fc,
        beta_pc,
        beta_ridge,
        beta_combo_linear,
        beta_combo_convex,
        alpha_linear,
        alpha_convex: a_cvx,
        df_fc,
        df_pc,
        df_combo_linear,
        df_combo_convex,
        df_ridge,
        rss_ridge,
    })
}
