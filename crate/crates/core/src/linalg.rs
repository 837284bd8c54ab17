//! Dense linear-algebra primitives: a thin SVD with deterministic ordering
//! and signs, per-direction spectral shrinkage factors, and the regularized
//! inverse that lets one factorization serve an entire penalty path.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which singular values count as zero:
/// `singval <= RANK_RTOL * max(singvals)` is treated as rank-deficient.
pub const RANK_RTOL: f64 = 1e-10;

/// Thin singular value decomposition `M = left * diag(singvals) * right^T`.
///
/// For an `m x p` input, exactly `r = min(m, p)` triplets are retained —
/// trailing zero singular values included — so the shape is deterministic.
/// Singular values are sorted nonincreasing, and signs are fixed so the
/// largest-magnitude entry of each right singular vector is positive.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    /// Left singular vectors, `m x r`, orthonormal columns.
    pub left: DMatrix<f64>,
    /// Singular values, length `r`, nonincreasing, all >= 0.
    pub singvals: DVector<f64>,
    /// Right singular vectors, `p x r`, orthonormal columns.
    pub right: DMatrix<f64>,
}

impl ThinSvd {
    /// Number of retained triplets: `min(rows, cols)` of the factored input.
    pub fn r(&self) -> usize {
        self.singvals.len()
    }

    /// Number of rows of the factored input.
    pub fn nrows(&self) -> usize {
        self.left.nrows()
    }

    /// Number of columns of the factored input.
    pub fn ncols(&self) -> usize {
        self.right.nrows()
    }

    /// Numerical rank: count of singular values above `RANK_RTOL * max`.
    pub fn rank(&self) -> usize {
        let max = self.singvals.max();
        let tol = RANK_RTOL * max;
        self.singvals.iter().filter(|&&s| s > tol).count()
    }

    /// `true` when the numerical rank equals the column count, i.e. the
    /// factored matrix has full column rank.
    pub fn full_column_rank(&self) -> bool {
        self.r() == self.ncols() && self.rank() == self.ncols()
    }

    /// Reconstructs `left * diag(singvals) * right^T` (test/oracle helper).
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.singvals[j];
        }
        scaled * self.right.transpose()
    }
}

/// Computes the thin SVD of `m` with deterministic ordering and signs.
///
/// # Errors
///
/// `InvalidInput` when `m` is empty or contains non-finite entries.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput("thin_svd: empty matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "thin_svd: matrix contains non-finite entries".into(),
        ));
    }

    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors were requested");
    let vt = svd.v_t.expect("right singular vectors were requested");
    let sv = svd.singular_values;
    let r = sv.len();

    // Deterministic order: descending singular value, original index on ties.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap().then(a.cmp(&b)));

    let mut left = DMatrix::zeros(m.nrows(), r);
    let mut right = DMatrix::zeros(m.ncols(), r);
    let mut singvals = DVector::zeros(r);
    for (new_j, &old_j) in order.iter().enumerate() {
        singvals[new_j] = sv[old_j];
        let mut ucol = u.column(old_j).clone_owned();
        let mut vcol = vt.row(old_j).transpose();
        // Sign convention: largest-magnitude entry of the right vector
        // positive; first such entry wins on exact ties.
        let mut pivot = 0;
        for k in 1..vcol.len() {
            if vcol[k].abs() > vcol[pivot].abs() {
                pivot = k;
            }
        }
        if vcol[pivot] < 0.0 {
            ucol.neg_mut();
            vcol.neg_mut();
        }
        left.set_column(new_j, &ucol);
        right.set_column(new_j, &vcol);
    }

    Ok(ThinSvd {
        left,
        singvals,
        right,
    })
}

/// Per-direction spectral factors of `(L^2 + lambda I)^-1` for fixed
/// `lambda >= 0`.
///
/// The degenerate corner `l_j = lambda = 0` follows the pseudoinverse
/// convention: both factors are zero there.
#[derive(Clone, Debug)]
pub struct SpectralShrinker {
    /// Singular values `l_j` the factors are built from.
    pub singvals: DVector<f64>,
    /// The (nonnegative) penalty.
    pub lambda: f64,
}

impl SpectralShrinker {
    /// # Errors
    ///
    /// `InvalidLambda` for negative or non-finite `lambda`; `InvalidInput`
    /// for non-finite or negative singular values.
    pub fn new(singvals: DVector<f64>, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidLambda(format!(
                "shrinker needs lambda >= 0, got {lambda}"
            )));
        }
        if singvals.iter().any(|&l| !l.is_finite() || l < 0.0) {
            return Err(Error::InvalidInput(
                "shrinker singular values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { singvals, lambda })
    }

    /// `l_j / (l_j^2 + lambda)` per direction; equals `1 / l_j` at
    /// `lambda = 0` for positive `l_j`.
    pub fn shrink_factors(&self) -> DVector<f64> {
        self.singvals.map(|l| {
            let denom = l * l + self.lambda;
            if denom > 0.0 {
                l / denom
            } else {
                0.0
            }
        })
    }

    /// `1 / (l_j^2 + lambda)` per direction.
    pub fn inverse_factors(&self) -> DVector<f64> {
        self.singvals.map(|l| {
            let denom = l * l + self.lambda;
            if denom > 0.0 {
                1.0 / denom
            } else {
                0.0
            }
        })
    }
}

/// Applies `(X^T Q^T Q X + lambda I)^-1` to `v` from the thin SVD of `QX`:
///
/// ```text
/// R (L^2 + lambda I)^-1 R^T v  +  lambda^-1 (v - R R^T v)
/// ```
///
/// The complement term enters exactly when the factorization retains fewer
/// directions than columns (`r < p`); for `r = p` the stored `R` is square
/// orthogonal and the complement vanishes identically.
///
/// # Errors
///
/// `InvalidLambda` for negative or non-finite `lambda`; `SingularSystem`
/// when `lambda = 0` and `QX` is numerically rank-deficient;
/// `DimensionMismatch` when `v` is not a `p`-vector.
pub fn regularized_inverse_apply(
    svd: &ThinSvd,
    lambda: f64,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let p = svd.ncols();
    if v.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "regularized_inverse_apply: expected a {p}-vector, got length {}",
            v.len()
        )));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidLambda(format!(
            "regularized_inverse_apply needs lambda >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 && !svd.full_column_rank() {
        return Err(Error::SingularSystem(
            "lambda = 0 requires full numerical column rank".into(),
        ));
    }

    let coords = svd.right.transpose() * v;
    let inv = SpectralShrinker::new(svd.singvals.clone(), lambda)?.inverse_factors();
    let mut w = &svd.right * coords.component_mul(&inv);
    if svd.r() < p {
        // lambda > 0 is guaranteed here by the rank check above.
        let complement = v - &svd.right * coords;
        w += complement / lambda;
    }
    Ok(w)
}
