//! Sparse-Bernoulli compression matrices.
//!
//! A sketch `Q` is a `q x n` random matrix whose cells are `0` with
//! probability `1 - 1/s` and `+-1` each with probability `1/(2s)`,
//! renormalized by `sqrt(s/q)` so that `E[Q^T Q] = I_n`. Cells are drawn by
//! a counter-based hash of `(seed, i, j)`, which makes generation
//! order-independent, and the multiply accumulates each output cell in a
//! fixed column order, which makes application bitwise reproducible at any
//! thread count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{cell_sign, derive_seed};

/// Stream tag separating moment-check draws from other uses of a seed.
const MOMENT_STREAM: u64 = 0x4d4f;

/// Description of a sparse-Bernoulli sketch: shape, sparsity, and seed.
///
/// `s` is any real number >= 1 (zero probability `1 - 1/s`); `q` may exceed
/// `n`, which is useful for diagnostics that oversample the Gram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchSpec {
    /// Input rows (columns of Q).
    pub n: usize,
    /// Compressed rows (rows of Q).
    pub q: usize,
    /// Sparsity parameter: cells are nonzero with probability `1/s`.
    pub s: f64,
    /// Seed for the counter-based cell hash.
    pub seed: u64,
}

impl SketchSpec {
    /// Builds a validated spec.
    pub fn new(n: usize, q: usize, s: f64, seed: u64) -> Result<Self> {
        let spec = Self { n, q, s, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the invariants: `n >= 1`, `q >= 1`, `s >= 1` and finite.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("sketch spec: n must be >= 1".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidInput("sketch spec: q must be >= 1".into()));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::InvalidInput(
                "sketch spec: n exceeds the supported column range".into(),
            ));
        }
        if !self.s.is_finite() || self.s < 1.0 {
            return Err(Error::InvalidSparsity(self.s));
        }
        Ok(())
    }

    /// Normalization scale `sqrt(s/q)` so that `E[Q^T Q] = I_n`.
    pub fn scale(&self) -> f64 {
        (self.s / self.q as f64).sqrt()
    }

    /// Expected nonzero count `q * n / s`.
    pub fn expected_nnz(&self) -> f64 {
        self.q as f64 * self.n as f64 / self.s
    }
}

/// A materialized sparse sketch in compressed-sparse-row form.
///
/// Stored entries are signs; the common magnitude is `scale = sqrt(s/q)`,
/// applied once per output cell during multiplication.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSketch {
    /// The generating description.
    pub spec: SketchSpec,
    /// Magnitude of every nonzero entry.
    pub scale: f64,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    signs: Vec<i8>,
}

impl SparseSketch {
    /// Number of stored nonzeros.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Iterates stored entries as `(row, col, sign)` triplets, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        (0..self.spec.q).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |t| (i, self.cols[t] as usize, self.signs[t]))
        })
    }

    /// Builds a sketch from explicit triplets (validated: in-range indices,
    /// signs in `{-1, +1}`, at most one entry per cell).
    pub fn from_triplets(spec: SketchSpec, triplets: &[(usize, usize, i8)]) -> Result<Self> {
        spec.validate()?;
        let mut sorted: Vec<(usize, usize, i8)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|&(r, c, _)| (r, c));
        for window in sorted.windows(2) {
            if window[0].0 == window[1].0 && window[0].1 == window[1].1 {
                return Err(Error::InvalidInput(format!(
                    "duplicate sketch entry at ({}, {})",
                    window[0].0, window[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; spec.q + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut signs = Vec::with_capacity(sorted.len());
        for &(r, c, sign) in &sorted {
            if r >= spec.q || c >= spec.n {
                return Err(Error::InvalidInput(format!(
                    "sketch entry ({r}, {c}) out of range for a {} x {} sketch",
                    spec.q, spec.n
                )));
            }
            if sign != 1 && sign != -1 {
                return Err(Error::InvalidInput(format!(
                    "sketch entry sign must be +-1, got {sign}"
                )));
            }
            row_ptr[r + 1] += 1;
            cols.push(c as u32);
            signs.push(sign);
        }
        for i in 0..spec.q {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            scale: spec.scale(),
            spec,
            row_ptr,
            cols,
            signs,
        })
    }

    /// The identity sketch `Q = I_n` (`q = n`, scale exactly 1), so that
    /// compressed estimators can be checked against their exact
    /// uncompressed counterparts.
    pub fn identity(n: usize) -> Result<Self> {
        let spec = SketchSpec::new(n, n, n as f64, 0)?;
        let triplets: Vec<(usize, usize, i8)> = (0..n).map(|i| (i, i, 1)).collect();
        Self::from_triplets(spec, &triplets)
    }

    /// Densifies the sketch (test/oracle helper).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.spec.q, self.spec.n);
        for (i, j, sign) in self.entries() {
            m[(i, j)] = sign as f64 * self.scale;
        }
        m
    }
}

/// Draws the sketch described by `spec`.
///
/// Each cell `(i, j)` is an independent sparse-Bernoulli draw that is a pure
/// function of `(seed, i, j)`, so two calls with the same spec produce
/// identical triplet sets regardless of thread count.
///
/// # Errors
///
/// `InvalidSparsity` when `s < 1`; `InvalidInput` for degenerate shapes.
pub fn generate_sketch(spec: &SketchSpec) -> Result<SparseSketch> {
    spec.validate()?;
    let n = spec.n;
    let rows: Vec<(Vec<u32>, Vec<i8>)> = (0..spec.q)
        .into_par_iter()
        .map(|i| {
            let mut cols = Vec::new();
            let mut signs = Vec::new();
            for j in 0..n {
                let sign = cell_sign(spec.seed, i, j, n, spec.s);
                if sign != 0 {
                    cols.push(j as u32);
                    signs.push(sign);
                }
            }
            (cols, signs)
        })
        .collect();

    let nnz: usize = rows.iter().map(|(c, _)| c.len()).sum();
    let mut row_ptr = Vec::with_capacity(spec.q + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut signs = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for (c, s) in rows {
        cols.extend_from_slice(&c);
        signs.extend_from_slice(&s);
        row_ptr.push(cols.len());
    }
    Ok(SparseSketch {
        scale: spec.scale(),
        spec: *spec,
        row_ptr,
        cols,
        signs,
    })
}

/// Computes `Q * M` using only stored nonzeros.
///
/// Each output cell accumulates its contributions in fixed (ascending)
/// column order and the scale is applied once at the end, so the result is
/// bitwise identical at any thread count.
///
/// # Errors
///
/// `DimensionMismatch` when `M` does not have exactly `n` rows.
pub fn apply_sketch(sketch: &SparseSketch, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != sketch.spec.n {
        return Err(Error::DimensionMismatch(format!(
            "apply_sketch: sketch expects {} rows, matrix has {}",
            sketch.spec.n,
            m.nrows()
        )));
    }
    let k = m.ncols();
    let rows: Vec<Vec<f64>> = (0..sketch.spec.q)
        .into_par_iter()
        .map(|i| {
            let lo = sketch.row_ptr[i];
            let hi = sketch.row_ptr[i + 1];
            let mut out = vec![0.0; k];
            for (c, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for t in lo..hi {
                    acc += sketch.signs[t] as f64 * m[(sketch.cols[t] as usize, c)];
                }
                *slot = acc * sketch.scale;
            }
            out
        })
        .collect();
    Ok(DMatrix::from_fn(sketch.spec.q, k, |i, c| rows[i][c]))
}

/// Computes `Q * v` for a vector (same contract as [`apply_sketch`]).
pub fn apply_sketch_vec(sketch: &SparseSketch, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != sketch.spec.n {
        return Err(Error::DimensionMismatch(format!(
            "apply_sketch_vec: sketch expects length {}, vector has {}",
            sketch.spec.n,
            v.len()
        )));
    }
    let out: Vec<f64> = (0..sketch.spec.q)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for t in sketch.row_ptr[i]..sketch.row_ptr[i + 1] {
                acc += sketch.signs[t] as f64 * v[sketch.cols[t] as usize];
            }
            acc * sketch.scale
        })
        .collect();
    Ok(DVector::from_vec(out))
}

/// Empirical first and second moments of `A = Q^T Q` over repeated draws,
/// together with the analytic targets they should match.
#[derive(Clone, Debug)]
pub struct MomentReport {
    /// Spec the draws were generated from (seed = stream base).
    pub spec: SketchSpec,
    /// Number of Monte-Carlo draws.
    pub draws: usize,
    /// Empirical mean of `A` (target: the identity).
    pub mean: DMatrix<f64>,
    /// Standard error of each mean entry.
    pub mean_se: DMatrix<f64>,
    /// Empirical variance of each entry of `A`.
    pub var: DMatrix<f64>,
    /// Standard error of each variance estimate (fourth-moment based).
    pub var_se: DMatrix<f64>,
    /// Analytic `Var(A_ii) = (s - 1)/q`.
    pub analytic_var_diag: f64,
    /// Analytic `Var(A_ij) = 1/q` for `i != j`.
    pub analytic_var_offdiag: f64,
    /// Analytic `Cov(A_ij, A_ji) = 1/q` (met exactly: `A` is symmetric).
    pub analytic_cov_transpose: f64,
}

/// Monte-Carlo check of the sketch Gram's moment law.
///
/// Draws `A = Q^T Q` repeatedly (seeds derived from `spec.seed`) and returns
/// empirical means and per-entry variances with standard errors, next to the
/// analytic targets `E[A] = I`, `Var(A_ii) = (s-1)/q`, `Var(A_ij) = 1/q`.
///
/// # Errors
///
/// `InstanceTooLarge` when `n > 12` (the check materializes `n^2`-sized
/// moment estimates); `InvalidInput` when `draws = 0`.
pub fn gram_moment_check(spec: &SketchSpec, draws: usize) -> Result<MomentReport> {
    spec.validate()?;
    if spec.n > 12 {
        return Err(Error::InstanceTooLarge(format!(
            "gram_moment_check materializes n^2 moment estimates; n = {} > 12",
            spec.n
        )));
    }
    if draws == 0 {
        return Err(Error::InvalidInput(
            "gram_moment_check needs at least one draw".into(),
        ));
    }

    let n = spec.n;
    let q = spec.q;
    let scale2 = spec.s / q as f64;
    let mut s1 = vec![0.0f64; n * n];
    let mut s2 = vec![0.0f64; n * n];
    let mut s3 = vec![0.0f64; n * n];
    let mut s4 = vec![0.0f64; n * n];

    let mut signs = vec![0i8; q * n];
    for t in 0..draws {
        let seed_t = derive_seed(spec.seed, &[MOMENT_STREAM, t as u64]);
        for i in 0..q {
            for j in 0..n {
                signs[i * n + j] = cell_sign(seed_t, i, j, n, spec.s);
            }
        }
        for i in 0..n {
            for j in 0..n {
                // Integer accumulation of the +-1 inner product is exact.
                let mut dot: i64 = 0;
                for k in 0..q {
                    dot += (signs[k * n + i] * signs[k * n + j]) as i64;
                }
                let a = scale2 * dot as f64;
                let cell = i * n + j;
                s1[cell] += a;
                s2[cell] += a * a;
                s3[cell] += a * a * a;
                s4[cell] += a * a * a * a;
            }
        }
    }

    let nf = draws as f64;
    let mut mean = DMatrix::zeros(n, n);
    let mut mean_se = DMatrix::zeros(n, n);
    let mut var = DMatrix::zeros(n, n);
    let mut var_se = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let cell = i * n + j;
            let m1 = s1[cell] / nf;
            let m2 = (s2[cell] / nf - m1 * m1).max(0.0);
            // Central fourth moment from raw sums.
            let m4 = (s4[cell] / nf - 4.0 * m1 * s3[cell] / nf + 6.0 * m1 * m1 * s2[cell] / nf
                - 3.0 * m1.powi(4))
            .max(0.0);
            let v = m2 * nf / (nf - 1.0).max(1.0);
            mean[(i, j)] = m1;
            var[(i, j)] = v;
            mean_se[(i, j)] = (m2 / nf).sqrt();
            var_se[(i, j)] = ((m4 - m2 * m2).max(0.0) / nf).sqrt();
        }
    }

    Ok(MomentReport {
        spec: *spec,
        draws,
        mean,
        mean_se,
        var,
        var_se,
        analytic_var_diag: (spec.s - 1.0) / q as f64,
        analytic_var_offdiag: 1.0 / q as f64,
        analytic_cov_transpose: 1.0 / q as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_sketch_is_exact() {
        let q = SparseSketch::identity(4).unwrap();
        assert_eq!(q.scale, 1.0);
        assert_eq!(q.nnz(), 4);
        let m = DMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64);
        let qm = apply_sketch(&q, &m).unwrap();
        assert_eq!(qm, m);
    }

    #[test]
    fn from_triplets_rejects_duplicates() {
        let spec = SketchSpec::new(3, 2, 1.5, 0).unwrap();
        let r = SparseSketch::from_triplets(spec, &[(0, 1, 1), (0, 1, -1)]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn spec_rejects_sub_one_sparsity() {
        assert!(matches!(
            SketchSpec::new(4, 2, 0.5, 0),
            Err(Error::InvalidSparsity(_))
        ));
    }

    #[test]
    fn moment_check_rejects_large_n() {
        let spec = SketchSpec::new(13, 4, 3.0, 0).unwrap();
        assert!(matches!(
            gram_moment_check(&spec, 10),
            Err(Error::InstanceTooLarge(_))
        ));
    }
}
