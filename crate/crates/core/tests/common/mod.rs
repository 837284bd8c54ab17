//! Shared helpers for the integration tests: seeded random instances and
//! brute-force dense oracles to check the engine against.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded matrix with i.i.d. standard normal entries.
pub fn rand_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
}

/// Seeded vector with i.i.d. standard normal entries.
pub fn rand_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))
}

/// Dense solve of `(G + lambda I) b = rhs` by LU, the brute-force oracle
/// for the spectral solvers.
pub fn dense_reg_solve(g: &DMatrix<f64>, lambda: f64, rhs: &DVector<f64>) -> DVector<f64> {
    let p = g.nrows();
    let reg = g + DMatrix::<f64>::identity(p, p) * lambda;
    reg.lu()
        .solve(rhs)
        .expect("regularized system is invertible")
}

/// Design with exactly orthogonal columns scaled so `X^T X = n I_p`.
pub fn orthogonal_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let m = rand_matrix(n, p, seed);
    let q = m.qr().q();
    q * (n as f64).sqrt()
}

/// Relative error `|a - b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}
