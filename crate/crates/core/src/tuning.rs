//! Degrees-of-freedom traces, GCV, the Cp-style risk estimate, and λ
//! selection over a grid.
//!
//! The df traces come for free from the compressed design's spectrum: no
//! hat matrix is ever formed. GCV needs no variance estimate; the Cp risk
//! takes a caller-supplied one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{CompressedDesign, FitResult, Method};
use crate::linalg::ThinSvd;

/// Default grid size for [`default_lambda_grid`].
pub const DEFAULT_GRID_SIZE: usize = 50;

/// Relative tolerance under which two criterion values count as tied.
const TIE_RTOL: f64 = 1e-12;

/// Model-selection criterion for [`select_lambda`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Generalized cross-validation (variance-free).
    Gcv,
    /// Cp-style unbiased risk estimate (needs a variance estimate).
    Cp,
}

/// One λ grid point of a tuning profile for a single estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    /// Penalty level.
    pub lambda: f64,
    /// Residual sum of squares at this λ.
    pub rss: f64,
    /// Degrees of freedom at this λ.
    pub df: f64,
    /// GCV score; `None` when the fit is saturated (`df >= n`).
    pub gcv: Option<f64>,
    /// Cp risk estimate; `None` when no variance estimate was supplied.
    pub risk_cp: Option<f64>,
}

/// Degrees of freedom of the fully compressed fit:
/// `tr(X (X^T Q^T Q X + lambda I)^{-1} X^T Q^T Q) = sum l_j^2/(l_j^2 + lambda)`
/// over the singular values of `QX` (zeros contribute zero).
///
/// # Errors
///
/// `InvalidLambda` when `lambda <= 0` or non-finite.
pub fn df_fc(cd: &CompressedDesign, lambda: f64) -> Result<f64> {
    check_positive_lambda("df_fc", lambda)?;
    Ok(cd
        .qx_svd
        .singvals
        .iter()
        .map(|&l| {
            let l2 = l * l;
            l2 / (l2 + lambda)
        })
        .sum())
}

/// Degrees of freedom of the partially compressed fit:
/// `tr(X (X^T Q^T Q X + lambda I)^{-1} X^T)
///  = sum_j [R^T X^T X R]_jj / (l_j^2 + lambda) + (tr X^T X - tr R^T X^T X R)/lambda`,
/// the complement term appearing only when `QX` has fewer than `p` singular
/// values (for square-orthogonal `R` it is identically zero and adding its
/// rounding residue over λ would only inject noise).
///
/// The PC hat matrix is not a contraction, so this value may exceed `p`.
///
/// # Errors
///
/// `InvalidLambda` when `lambda <= 0` or non-finite.
pub fn df_pc(cd: &CompressedDesign, lambda: f64) -> Result<f64> {
    check_positive_lambda("df_pc", lambda)?;
    let r = cd.qx_svd.r();
    let mut df = 0.0;
    for j in 0..r {
        let l2 = cd.qx_svd.singvals[j] * cd.qx_svd.singvals[j];
        df += cd.rtxxr[(j, j)] / (l2 + lambda);
    }
    if r < cd.qx_svd.ncols() {
        df += (cd.trace_xx - cd.rtxxr.trace()).max(0.0) / lambda;
    }
    Ok(df)
}

/// Plug-in degrees of freedom of a combination fit: the same weights that
/// combine the estimators combine their df traces, `alpha` ordered (FC, PC).
pub fn df_combo(df_fc_val: f64, df_pc_val: f64, alpha: [f64; 2]) -> f64 {
    alpha[0] * df_fc_val + alpha[1] * df_pc_val
}

/// Generalized cross-validation score `rss / (1 - df/n)^2`.
///
/// # Errors
///
/// `DegenerateGcv` when `df >= n` (saturated fit; the score has no
/// information left).
pub fn gcv(rss: f64, df: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if df >= nf {
        return Err(Error::DegenerateGcv { df, n });
    }
    let denom = 1.0 - df / nf;
    Ok(rss / (denom * denom))
}

/// Cp-style risk estimate `rss - n sigma2_hat + 2 sigma2_hat df`.
///
/// The variance estimate is the caller's responsibility; producing one from
/// OLS residuals would cost as much as the uncompressed solve this library
/// exists to avoid.
pub fn risk_cp(rss: f64, df: f64, n: usize, sigma2_hat: f64) -> f64 {
    rss - n as f64 * sigma2_hat + 2.0 * sigma2_hat * df
}

/// Picks the grid point minimizing the chosen criterion.
///
/// Records whose criterion is absent (degenerate GCV, or Cp without a
/// variance estimate) are skipped. Ties within `1e-12` relative resolve
/// toward the larger λ (more regularization at equal evidence).
///
/// # Errors
///
/// `NoValidLambda` when no record carries a usable criterion value.
pub fn select_lambda(
    records: &[TuningRecord],
    criterion: Criterion,
) -> Result<(f64, TuningRecord)> {
    let mut best: Option<(f64, &TuningRecord)> = None;
    for rec in records {
        let value = match criterion {
            Criterion::Gcv => rec.gcv,
            Criterion::Cp => rec.risk_cp,
        };
        let Some(value) = value else { continue };
        if !value.is_finite() {
            continue;
        }
        best = Some(match best {
            None => (value, rec),
            Some((best_value, best_rec)) => {
                let tie =
                    (value - best_value).abs() <= TIE_RTOL * value.abs().max(best_value.abs());
                if tie {
                    if rec.lambda > best_rec.lambda {
                        (value, rec)
                    } else {
                        (best_value, best_rec)
                    }
                } else if value < best_value {
                    (value, rec)
                } else {
                    (best_value, best_rec)
                }
            }
        });
    }
    match best {
        Some((_, rec)) => Ok((rec.lambda, rec.clone())),
        None => Err(Error::NoValidLambda),
    }
}

/// Default λ grid: `count` log-spaced points spanning
/// `[1e-4, 1e4] x (mean singular value of QX)^2`, so the grid tracks the
/// magnitude of the compressed Gram whatever the design's scale.
pub fn default_lambda_grid(qx_svd: &ThinSvd, count: usize) -> Vec<f64> {
    let r = qx_svd.singvals.len().max(1);
    let mean = qx_svd.singvals.iter().sum::<f64>() / r as f64;
    let scale = if mean > 0.0 && mean.is_finite() {
        mean * mean
    } else {
        1.0
    };
    let lo = (1e-4 * scale).log10();
    let hi = (1e4 * scale).log10();
    if count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![10f64.powf(0.5 * (lo + hi))];
    }
    (0..count)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
        .collect()
}

/// Extracts the tuning record for one estimator from a path fit.
///
/// `sigma2_hat`, when given, fills in the Cp risk. A saturated GCV
/// (`df >= n`) is recorded as `None` rather than an error so that a grid
/// scan can skip it.
///
/// # Errors
///
/// `InvalidInput` for `Method::Ols` (no penalty path) or for
/// `Method::Ridge` when the path was fit without ridge.
pub fn record_for(
    fit: &FitResult,
    method: Method,
    n: usize,
    sigma2_hat: Option<f64>,
) -> Result<TuningRecord> {
    let (rss, df) = match method {
        Method::Fc => (fit.rss_fc, fit.df_fc),
        Method::Pc => (fit.rss_pc, fit.df_pc),
        Method::ComboLinear => (fit.rss_combo_linear, fit.df_combo_linear),
        Method::ComboConvex => (fit.rss_combo_convex, fit.df_combo_convex),
        Method::Ridge => match (fit.rss_ridge, fit.df_ridge) {
            (Some(rss), Some(df)) => (rss, df),
            _ => {
                return Err(Error::InvalidInput(
                    "ridge was not fit along this path; enable it in PathOptions".into(),
                ))
            }
        },
        Method::Ols => {
            return Err(Error::InvalidInput(
                "ols has no penalty path to tune".into(),
            ))
        }
    };
    Ok(TuningRecord {
        lambda: fit.lambda,
        rss,
        df,
        gcv: gcv(rss, df, n).ok(),
        risk_cp: sigma2_hat.map(|s2| risk_cp(rss, df, n, s2)),
    })
}

fn check_positive_lambda(what: &str, lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidLambda(format!(
            "{what} requires lambda > 0, got {lambda}"
        )));
    }
    Ok(())
}
