//! Closed-form oracle for ridge and compressed-ridge moments.
//!
//! Everything here is evaluated in the spectral coordinates of `X = U D V^T`
//! with `M := (X^T X + lambda I)^{-1} X^T` and `H := X M`: ridge bias and
//! variance, first-order (in `1/q`) means/variances of the fully and
//! partially compressed estimators, their conditional-on-sketch corrections,
//! and the orthogonal-design MSE formulas with their optimal penalties.
//!
//! Remainder terms of the underlying expansions are dropped throughout; the
//! concordance tests carry explicit `q`-dependent tolerances instead. No
//! `n x n` matrix is ever formed — conditional corrections consume the
//! sketch only through `QU` and `Qw` products.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ridge_from_svd;
use crate::linalg::ThinSvd;
use crate::sketch::{apply_sketch, apply_sketch_vec, SparseSketch};

/// Upper bracket for the numeric θ search; the MSE curves are flat long
/// before this.
const THETA_MAX: f64 = 1e6;

/// Estimator family the oracle can describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Uncompressed ridge.
    Ridge,
    /// Fully compressed ridge.
    Fc,
    /// Partially compressed ridge.
    Pc,
}

impl Family {
    /// Stable snake_case name.
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ridge => "ridge",
            Family::Fc => "fc",
            Family::Pc => "pc",
        }
    }
}

/// Fixed quantities the oracle formulas are evaluated at.
#[derive(Clone, Debug)]
pub struct TheoryInputs {
    /// Thin SVD of the design `X`.
    pub x_svd: ThinSvd,
    /// True coefficient vector.
    pub beta_star: DVector<f64>,
    /// Noise variance `sigma^2 > 0`.
    pub sigma2: f64,
    /// Penalty level (`>= 0`; the compressed expansions assume `> 0`).
    pub lambda: f64,
    /// Sketch rows.
    pub q: usize,
    /// Sketch sparsity parameter.
    pub s: f64,
    /// Observations (must agree with the SVD).
    pub n: usize,
}

impl TheoryInputs {
    /// Builds validated inputs.
    pub fn new(
        x_svd: ThinSvd,
        beta_star: DVector<f64>,
        sigma2: f64,
        lambda: f64,
        q: usize,
        s: f64,
        n: usize,
    ) -> Result<Self> {
        if n != x_svd.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "theory inputs: n = {n} but the SVD has {} rows",
                x_svd.nrows()
            )));
        }
        if beta_star.len() != x_svd.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "theory inputs: beta_star has length {} but X has {} columns",
                beta_star.len(),
                x_svd.ncols()
            )));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "theory inputs: sigma2 must be > 0, got {sigma2}"
            )));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidLambda(format!(
                "theory inputs: lambda must be >= 0, got {lambda}"
            )));
        }
        if q == 0 {
            return Err(Error::InvalidInput("theory inputs: q must be >= 1".into()));
        }
        if !s.is_finite() || s < 1.0 {
            return Err(Error::InvalidSparsity(s));
        }
        Ok(Self {
            x_svd,
            beta_star,
            sigma2,
            lambda,
            q,
            s,
            n,
        })
    }

    /// Spectral coordinates `c = V^T beta_star` plus the squared norm of
    /// the component of `beta_star` outside the span of `V`.
    fn spectral_coords(&self) -> (DVector<f64>, f64) {
        let c = self.x_svd.right.transpose() * &self.beta_star;
        let perp = (&self.beta_star - &self.x_svd.right * &c).norm_squared();
        (c, perp)
    }
}

/// Additive decomposition of a variance trace into the ridge baseline and
/// the two compression corrections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarTraceTerms {
    /// σ²-scale ridge term (zero in conditional-on-data mode, where the
    /// only randomness left is the sketch).
    pub baseline: f64,
    /// The `(s-2)_+/q` correction.
    pub s_term: f64,
    /// The `1/q` correction.
    pub q_term: f64,
}

impl VarTraceTerms {
    /// Sum of all terms.
    pub fn total(&self) -> f64 {
        self.baseline + self.s_term + self.q_term
    }
}

/// First-order mean and variance trace of a compressed estimator.
#[derive(Clone, Debug)]
pub struct Moments {
    /// Expansion mean (the ridge estimator, or its expectation).
    pub mean: DVector<f64>,
    /// Variance trace, split into additive terms.
    pub var_trace: VarTraceTerms,
}

/// What the compressed-estimator moments condition on.
#[derive(Clone, Copy, Debug)]
pub enum MomentMode<'a> {
    /// Conditional on the realized data `(X, Y)`: the variance is over
    /// sketch draws only.
    Data(&'a DVector<f64>),
    /// Conditional on the design `X` alone: the response is integrated out.
    Design,
}

/// Bias-variance split with its sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseBreakdown {
    /// Squared bias of the coefficient estimate.
    pub bias_sq: f64,
    /// Trace of the coefficient covariance.
    pub var_trace: f64,
    /// `bias_sq + var_trace`, exactly.
    pub mse: f64,
}

impl MseBreakdown {
    /// Builds the split, defining `mse` as the exact sum.
    pub fn new(bias_sq: f64, var_trace: f64) -> Self {
        Self {
            bias_sq,
            var_trace,
            mse: bias_sq + var_trace,
        }
    }
}

/// Positive part `(x)_+`.
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// `d^2/(d^2 + lambda)` with the `0/0` corner resolved to 0 (a null
/// direction is outside the range of `X`).
fn hat_factor(d: f64, lambda: f64) -> f64 {
    let d2 = d * d;
    if d2 + lambda > 0.0 {
        d2 / (d2 + lambda)
    } else {
        0.0
    }
}

/// `tr(M M^T) = sum d^2/(d^2+lambda)^2`.
fn trace_mmt(ti: &TheoryInputs) -> f64 {
    ti.x_svd
        .singvals
        .iter()
        .map(|&d| {
            let d2 = d * d;
            let den = d2 + ti.lambda;
            if den > 0.0 {
                d2 / (den * den)
            } else {
                0.0
            }
        })
        .sum()
}

/// Exact ridge squared bias `lambda^2 beta*^T V (D^2+lambda)^-2 V^T beta*`,
/// plus the full weight of any `beta*` component outside the span of `V`
/// (which the minimum-norm ridge estimator never reaches).
pub fn ridge_bias_sq(ti: &TheoryInputs) -> f64 {
    let (c, perp) = ti.spectral_coords();
    let mut total = perp;
    for (j, &d) in ti.x_svd.singvals.iter().enumerate() {
        let bias_factor = 1.0 - hat_factor(d, ti.lambda);
        total += (bias_factor * c[j]).powi(2);
    }
    total
}

/// Exact ridge variance trace `sigma^2 sum d^2/(d^2+lambda)^2`.
pub fn ridge_var_trace(ti: &TheoryInputs) -> f64 {
    ti.sigma2 * trace_mmt(ti)
}

/// First-order mean and variance trace of the fully compressed estimator.
///
/// Conditional on the data, the variance over sketch draws is
/// `((s-2)_+/q) ||M e||^2 + (e^T e / q) tr(M M^T)` with `e = (I - H) Y`;
/// conditional on the design alone, the response is integrated out against
/// `E[e e^T] = (I-H)(X b* b*^T X^T + sigma^2 I)(I-H)` and the ridge
/// baseline `sigma^2 tr(M M^T)` reappears.
///
/// # Errors
///
/// Dimension mismatches between the mode's response and the design.
pub fn fc_moments(ti: &TheoryInputs, mode: MomentMode<'_>) -> Result<Moments> {
    compressed_moments(ti, mode, Family::Fc)
}

/// First-order mean and variance trace of the partially compressed
/// estimator: as [`fc_moments`] with the fitted value `H Y` in place of the
/// residual `(I - H) Y`.
///
/// # Errors
///
/// Dimension mismatches between the mode's response and the design.
pub fn pc_moments(ti: &TheoryInputs, mode: MomentMode<'_>) -> Result<Moments> {
    compressed_moments(ti, mode, Family::Pc)
}

fn compressed_moments(ti: &TheoryInputs, mode: MomentMode<'_>, family: Family) -> Result<Moments> {
    debug_assert!(matches!(family, Family::Fc | Family::Pc));
    let svd = &ti.x_svd;
    let r = svd.r();
    let qf = ti.q as f64;
    let s_coef = pos(ti.s - 2.0) / qf;
    let tr_mmt = trace_mmt(ti);

    match mode {
        MomentMode::Data(y) => {
            if y.len() != ti.n {
                return Err(Error::DimensionMismatch(format!(
                    "moments: Y has length {} but n = {}",
                    y.len(),
                    ti.n
                )));
            }
            let mean = ridge_from_svd(svd, y, ti.lambda)?;
            let u_ty = svd.left.transpose() * y;
            // Fitted values H Y in observation space.
            let mut hy = DVector::zeros(ti.n);
            for j in 0..r {
                let h = hat_factor(svd.singvals[j], ti.lambda);
                hy.axpy(h * u_ty[j], &svd.left.column(j).into_owned(), 1.0);
            }
            // Target vector of the quadratic form: residual for FC, fit for PC.
            let (target_sq, m_target_sq) = match family {
                Family::Fc => {
                    let e = y - &hy;
                    let mut m_sq = 0.0;
                    for j in 0..r {
                        let d = svd.singvals[j];
                        let den = d * d + ti.lambda;
                        if den > 0.0 {
                            let coord = d / den * (1.0 - hat_factor(d, ti.lambda)) * u_ty[j];
                            m_sq += coord * coord;
                        }
                    }
                    (e.norm_squared(), m_sq)
                }
                _ => {
                    let mut m_sq = 0.0;
                    for j in 0..r {
                        let d = svd.singvals[j];
                        let den = d * d + ti.lambda;
                        if den > 0.0 {
                            let coord = d / den * hat_factor(d, ti.lambda) * u_ty[j];
                            m_sq += coord * coord;
                        }
                    }
                    (hy.norm_squared(), m_sq)
                }
            };
            Ok(Moments {
                mean,
                var_trace: VarTraceTerms {
                    baseline: 0.0,
                    s_term: s_coef * m_target_sq,
                    q_term: target_sq / qf * tr_mmt,
                },
            })
        }
        MomentMode::Design => {
            let (c, _) = ti.spectral_coords();
            // Mean: E[beta_ridge] = V diag(h) c.
            let mut mean = DVector::zeros(svd.ncols());
            for j in 0..r {
                let h = hat_factor(svd.singvals[j], ti.lambda);
                mean.axpy(h * c[j], &svd.right.column(j).into_owned(), 1.0);
            }
            let lambda = ti.lambda;
            let mut s_beta = 0.0; // ||M W X b*||^2 with W = I-H (FC) or H (PC)
            let mut s_noise = 0.0; // tr(M W^2 M^T)
            let mut q_beta = 0.0; // ||W X b*||^2
            let mut q_noise = 0.0; // tr(W^2)
            for j in 0..r {
                let d = svd.singvals[j];
                let d2 = d * d;
                let den = d2 + lambda;
                if den <= 0.0 {
                    // Null direction under no penalty: H acts as 0 there.
                    if matches!(family, Family::Fc) {
                        q_noise += 1.0;
                    }
                    continue;
                }
                let h = d2 / den;
                let w = match family {
                    Family::Fc => 1.0 - h,
                    _ => h,
                };
                let m2 = d2 / (den * den); // squared row weight of M on u_j
                s_beta += m2 * w * w * d2 * c[j] * c[j];
                s_noise += m2 * w * w;
                q_beta += w * w * d2 * c[j] * c[j];
                q_noise += w * w;
            }
            if matches!(family, Family::Fc) {
                // (I-H) is the identity on the orthocomplement of span(U).
                q_noise += (ti.n - r) as f64;
            }
            Ok(Moments {
                mean,
                var_trace: VarTraceTerms {
                    baseline: ti.sigma2 * tr_mmt,
                    s_term: s_coef * (s_beta + ti.sigma2 * s_noise),
                    q_term: (ti.sigma2 * q_noise + q_beta) / qf * tr_mmt,
                },
            })
        }
    }
}

/// First-order squared bias of a compressed estimator.
///
/// Unconditionally (over sketch draws) the squared bias of both FC and PC
/// equals the ridge squared bias — the expansion's correction has mean
/// zero. Conditional on a realized sketch, the first-order correction
/// `2 b*^T (MX - I) M (A - I) W X b*` (with `W = I - H` for FC, `W = H` and
/// opposite sign for PC) is added; it is computed from `Q U` and `Q w`
/// products without materializing `A = Q^T Q`.
///
/// # Errors
///
/// Dimension mismatch when the sketch width differs from `n`.
pub fn bias_sq(
    ti: &TheoryInputs,
    family: Family,
    conditional_q: Option<&SparseSketch>,
) -> Result<f64> {
    let base = ridge_bias_sq(ti);
    let Some(sketch) = conditional_q else {
        return Ok(base);
    };
    if matches!(family, Family::Ridge) {
        // Ridge never touches the sketch.
        return Ok(base);
    }
    if sketch.spec.n != ti.n {
        return Err(Error::DimensionMismatch(format!(
            "bias_sq: sketch is {} wide but n = {}",
            sketch.spec.n, ti.n
        )));
    }
    let svd = &ti.x_svd;
    let r = svd.r();
    let (c, _) = ti.spectral_coords();
    let lambda = ti.lambda;

    // w = W X b* in observation space, with W = I-H (FC) or H (PC).
    let mut w = DVector::zeros(ti.n);
    for j in 0..r {
        let d = svd.singvals[j];
        let den = d * d + lambda;
        if den <= 0.0 {
            continue;
        }
        let coef = match family {
            Family::Fc => lambda * d / den,
            _ => d * d * d / den,
        };
        w.axpy(coef * c[j], &svd.left.column(j).into_owned(), 1.0);
    }
    // t = U^T (A - I) w via sketched products.
    let qu = apply_sketch(sketch, &svd.left)?;
    let qw = apply_sketch_vec(sketch, &w)?;
    let t = qu.transpose() * qw - svd.left.transpose() * w;

    let mut correction = 0.0;
    for j in 0..r {
        let d = svd.singvals[j];
        let den = d * d + lambda;
        if den <= 0.0 {
            continue;
        }
        correction += c[j] * d * t[j] / (den * den);
    }
    correction *= match family {
        Family::Fc => -2.0 * lambda,
        _ => 2.0 * lambda,
    };
    Ok(base + correction)
}

/// First-order variance trace of an estimator.
///
/// Unconditionally this is the ridge variance plus the two `1/q`
/// corrections (the total of the [`MomentMode::Design`] terms); conditional
/// on a sketch it is `sigma^2 (tr(M M^T) + 2 tr(M W (A - I) M^T))`
/// evaluated through the diagonal of `(QU)^T(QU) - I`.
///
/// # Errors
///
/// Dimension mismatch when the sketch width differs from `n`.
pub fn var_trace_expansion(
    ti: &TheoryInputs,
    family: Family,
    conditional_q: Option<&SparseSketch>,
) -> Result<f64> {
    match (family, conditional_q) {
        (Family::Ridge, _) => Ok(ridge_var_trace(ti)),
        (_, None) => Ok(compressed_moments(ti, MomentMode::Design, family)?
            .var_trace
            .total()),
        (_, Some(sketch)) => {
            if sketch.spec.n != ti.n {
                return Err(Error::DimensionMismatch(format!(
                    "var_trace_expansion: sketch is {} wide but n = {}",
                    sketch.spec.n, ti.n
                )));
            }
            let svd = &ti.x_svd;
            let qu = apply_sketch(sketch, &svd.left)?;
            let mut correction = 0.0;
            for j in 0..svd.r() {
                let d = svd.singvals[j];
                let d2 = d * d;
                let den = d2 + ti.lambda;
                if den <= 0.0 {
                    continue;
                }
                // B_jj = [ (QU)^T(QU) - I ]_jj
                let b_jj = qu.column(j).norm_squared() - 1.0;
                let weight = match family {
                    Family::Fc => ti.lambda * d2 / (den * den * den),
                    _ => d2 * d2 / (den * den * den),
                };
                correction += weight * b_jj;
            }
            Ok(ti.sigma2 * (trace_mmt(ti) + 2.0 * correction))
        }
    }
}

/// Unconditional bias/variance/MSE split for one family.
///
/// # Errors
///
/// Propagated input validation errors only.
pub fn mse_breakdown(ti: &TheoryInputs, family: Family) -> Result<MseBreakdown> {
    let bias = bias_sq(ti, family, None)?;
    let var = var_trace_expansion(ti, family, None)?;
    Ok(MseBreakdown::new(bias, var))
}

/// Orthogonal-design (`X^T X = n I_p`) MSE at penalty `theta = lambda/n`,
/// with `b2 = ||beta*||^2`.
///
/// These are the displayed closed forms: the ridge MSE
/// `b2 th^2/(1+th)^2 + p sigma^2 / (n (1+th)^2)` plus, for FC,
/// `b2 p th^2 (s-2)_+ / (q (1+th)^4) + p^2 th^2 b2 / (q (1+th)^4)` and,
/// for PC, `p (s-2)_+ b2 / (q (1+th)^2) + p b2 / (q (1+th)^4)`.
#[allow(clippy::too_many_arguments)]
pub fn mse_orthogonal(
    theta: f64,
    b2: f64,
    sigma2: f64,
    n: usize,
    p: usize,
    q: usize,
    s: f64,
    family: Family,
) -> f64 {
    let th = theta;
    let nf = n as f64;
    let pf = p as f64;
    let qf = q as f64;
    let one = 1.0 + th;
    let ridge = b2 * th * th / (one * one) + pf * sigma2 / (nf * one * one);
    match family {
        Family::Ridge => ridge,
        Family::Fc => {
            ridge
                + b2 * pf * th * th * pos(s - 2.0) / (qf * one.powi(4))
                + pf * pf * th * th * b2 / (qf * one.powi(4))
        }
        Family::Pc => {
            ridge + pf * pos(s - 2.0) * b2 / (qf * one * one) + pf * b2 / (qf * one.powi(4))
        }
    }
}

/// Numeric minimizer of [`mse_orthogonal`] over `theta in [0, 1e6]`:
/// a coarse log-grid scan brackets the minimum, then golden-section search
/// refines it to `1e-8` relative.
#[allow(clippy::too_many_arguments)]
pub fn optimal_theta_numeric(
    family: Family,
    b2: f64,
    sigma2: f64,
    n: usize,
    p: usize,
    q: usize,
    s: f64,
) -> f64 {
    let f = |th: f64| mse_orthogonal(th, b2, sigma2, n, p, q, s, family);
    // Coarse scan: theta = 0 plus log-spaced points up to THETA_MAX.
    let grid_points = 400usize;
    let lo_log = -8.0f64;
    let hi_log = THETA_MAX.log10();
    let mut grid = Vec::with_capacity(grid_points + 1);
    grid.push(0.0);
    for i in 0..grid_points {
        grid.push(10f64.powf(lo_log + (hi_log - lo_log) * i as f64 / (grid_points - 1) as f64));
    }
    let mut best = 0usize;
    let mut best_val = f(grid[0]);
    for (i, &th) in grid.iter().enumerate().skip(1) {
        let v = f(th);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let a = if best == 0 { 0.0 } else { grid[best - 1] };
    let b = if best + 1 < grid.len() {
        grid[best + 1]
    } else {
        THETA_MAX
    };
    golden_section(f, a, b)
}

/// Optimal `theta` for one family: the closed form `sigma^2 p / (n b2)` for
/// ridge, the numeric minimizer otherwise.
#[allow(clippy::too_many_arguments)]
pub fn optimal_theta(
    family: Family,
    b2: f64,
    sigma2: f64,
    n: usize,
    p: usize,
    q: usize,
    s: f64,
) -> f64 {
    match family {
        Family::Ridge => sigma2 * p as f64 / (n as f64 * b2),
        _ => optimal_theta_numeric(family, b2, sigma2, n, p, q, s),
    }
}

/// Bayes-optimal per-observation penalty `theta* = sigma^2/(n tau^2)` when
/// the coefficients are drawn iid with variance `tau^2` (so `b2 = p tau^2`
/// in the closed form). The unnormalized penalty is `n theta* = sigma^2/tau^2`.
pub fn bayes_theta_star(sigma2: f64, tau2: f64, n: usize) -> f64 {
    sigma2 / (n as f64 * tau2)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if b - a <= 1e-12 * (1.0 + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// One family's entry in an orthogonal-design report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyReport {
    /// Which estimator.
    pub family: Family,
    /// Optimal per-observation penalty `theta*`.
    pub theta_star: f64,
    /// The unnormalized penalty `n * theta*`.
    pub lambda_star_unnormalized: f64,
    /// MSE at `theta*`.
    pub mse_at_star: f64,
    /// Squared bias at `theta*` (the ridge bias term; compression does not
    /// move the first-order bias).
    pub bias_sq_at_star: f64,
    /// Variance share at `theta*` (`mse - bias_sq`).
    pub var_trace_at_star: f64,
}

/// Orthogonal-design theory report for ridge, FC, and PC.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryReport {
    /// Observations.
    pub n: usize,
    /// Predictors.
    pub p: usize,
    /// Sketch rows.
    pub q: usize,
    /// Sketch sparsity.
    pub s: f64,
    /// Squared norm of the true coefficients.
    pub b2: f64,
    /// Noise variance.
    pub sigma2: f64,
    /// Per-family optima.
    pub families: Vec<FamilyReport>,
}

/// Builds the orthogonal-design report: per family, the optimal `theta`,
/// its unnormalized counterpart, and the MSE split at the optimum.
pub fn orthogonal_report(
    n: usize,
    p: usize,
    q: usize,
    s: f64,
    b2: f64,
    sigma2: f64,
) -> TheoryReport {
    let families = [Family::Ridge, Family::Fc, Family::Pc]
        .into_iter()
        .map(|family| {
            let theta_star = optimal_theta(family, b2, sigma2, n, p, q, s);
            let mse = mse_orthogonal(theta_star, b2, sigma2, n, p, q, s, family);
            let one = 1.0 + theta_star;
            let bias = b2 * theta_star * theta_star / (one * one);
            FamilyReport {
                family,
                theta_star,
                lambda_star_unnormalized: n as f64 * theta_star,
                mse_at_star: mse,
                bias_sq_at_star: bias,
                var_trace_at_star: mse - bias,
            }
        })
        .collect();
    TheoryReport {
        n,
        p,
        q,
        s,
        b2,
        sigma2,
        families,
    }
}
