//! Thin-SVD and regularized-inverse contracts against dense oracles.

mod common;

use common::{dense_reg_solve, rand_matrix, rand_vector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sketchridge_core::error::Error;
use sketchridge_core::linalg::{regularized_inverse_apply, thin_svd, SpectralShrinker, ThinSvd};

fn check_factorization(m: &DMatrix<f64>) {
    let svd = thin_svd(m).unwrap();
    let r = m.nrows().min(m.ncols());
    assert_eq!(svd.left.ncols(), r, "thin factor keeps min(n, p) columns");
    assert_eq!(svd.right.ncols(), r);
    assert_eq!(svd.singvals.len(), r);

    // Singular values sorted descending and nonnegative.
    for j in 1..r {
        assert!(svd.singvals[j - 1] >= svd.singvals[j]);
        assert!(svd.singvals[j] >= 0.0);
    }

    // Orthonormal columns to 1e-8.
    let utu = svd.left.transpose() * &svd.left;
    let vtv = svd.right.transpose() * &svd.right;
    let id = DMatrix::<f64>::identity(r, r);
    assert!((utu - &id).norm() < 1e-8, "left factor orthonormal");
    assert!((vtv - &id).norm() < 1e-8, "right factor orthonormal");

    // Reconstruction to 1e-6 relative Frobenius.
    let rec = svd.reconstruct();
    let denom = m.norm().max(1e-12);
    assert!((rec - m).norm() / denom < 1e-6, "reconstruction");

    // Sign convention: the largest-magnitude entry of each right vector is
    // nonnegative, so the factorization is unique and run-to-run stable.
    for j in 0..r {
        let col = svd.right.column(j);
        let mut pivot = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        assert!(
            col[pivot] >= 0.0,
            "sign convention violated in right vector {j}"
        );
    }
}

#[test]
fn thin_svd_tall_square_wide() {
    for (n, p, seed) in [(40, 7, 1u64), (12, 12, 2), (6, 20, 3)] {
        check_factorization(&rand_matrix(n, p, seed));
    }
}

#[test]
fn thin_svd_is_deterministic() {
    let m = rand_matrix(30, 6, 77);
    let a = thin_svd(&m).unwrap();
    let b = thin_svd(&m).unwrap();
    assert_eq!(a.left, b.left);
    assert_eq!(a.singvals, b.singvals);
    assert_eq!(a.right, b.right);
}

#[test]
fn thin_svd_keeps_trailing_zeros() {
    // Rank-1 tall matrix: min(n, p) = 3 singular values, two of them ~0.
    let u = rand_vector(10, 4);
    let v = rand_vector(3, 5);
    let m = &u * v.transpose();
    let svd = thin_svd(&m).unwrap();
    assert_eq!(svd.singvals.len(), 3);
    assert_eq!(svd.rank(), 1);
    assert!(svd.singvals[1] < 1e-10 * svd.singvals[0]);
}

#[test]
fn rank_uses_relative_tolerance() {
    let mut m = DMatrix::zeros(4, 3);
    m[(0, 0)] = 1e6;
    m[(1, 1)] = 1.0;
    m[(2, 2)] = 1e-12; // below 1e-10 * 1e6 relative cut
    let svd = thin_svd(&m).unwrap();
    assert_eq!(svd.rank(), 2);
    assert!(!svd.full_column_rank());
}

#[test]
fn shrinker_factors_match_closed_form() {
    let sh = SpectralShrinker::new(DVector::from_vec(vec![2.0, 1.0]), 1.0).unwrap();
    let f = sh.shrink_factors();
    assert!((f[0] - 2.0 / 5.0).abs() < 1e-15);
    assert!((f[1] - 1.0 / 2.0).abs() < 1e-15);
}

#[test]
fn regularized_inverse_closed_form_cases() {
    // Diagonal design with singular values (2, 1): applying to the first
    // right vector scales it by 1/(4 + lambda).
    let m = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let svd = thin_svd(&m).unwrap();
    let r1 = svd.right.column(0).into_owned();
    let out = regularized_inverse_apply(&svd, 1.0, &r1).unwrap();
    assert!((out - &r1 / 5.0).norm() < 1e-12);

    // Huge penalty: the whole operator collapses toward v / lambda.
    let out = regularized_inverse_apply(&svd, 1e8, &r1).unwrap();
    assert!((out * 1e8 - &r1).norm() < 1e-6);
}

#[test]
fn regularized_inverse_matches_dense_oracle() {
    for seed in 0..10u64 {
        let m = rand_matrix(15, 6, 100 + seed);
        let v = rand_vector(6, 200 + seed);
        let svd = thin_svd(&m).unwrap();
        for lambda in [1e-3, 0.5, 10.0] {
            let ours = regularized_inverse_apply(&svd, lambda, &v).unwrap();
            let oracle = dense_reg_solve(&(m.transpose() * &m), lambda, &v);
            assert!(
                (&ours - &oracle).norm() < 1e-8 * (1.0 + oracle.norm()),
                "seed {seed}, lambda {lambda}"
            );
        }
    }
}

#[test]
fn regularized_inverse_needs_complement_when_wide() {
    // Fewer rows than columns: span(R) is a strict subspace, so the
    // complement term carries the rest of v / lambda.
    for seed in 0..5u64 {
        let m = rand_matrix(4, 9, 300 + seed);
        let v = rand_vector(9, 400 + seed);
        let svd = thin_svd(&m).unwrap();
        for lambda in [0.25, 3.0] {
            let ours = regularized_inverse_apply(&svd, lambda, &v).unwrap();
            let oracle = dense_reg_solve(&(m.transpose() * &m), lambda, &v);
            assert!((&ours - &oracle).norm() < 1e-8 * (1.0 + oracle.norm()));
        }
    }
}

#[test]
fn regularized_inverse_rejects_bad_inputs() {
    let m = rand_matrix(5, 3, 9);
    let svd = thin_svd(&m).unwrap();
    let v = rand_vector(3, 10);
    assert!(matches!(
        regularized_inverse_apply(&svd, -1.0, &v),
        Err(Error::InvalidLambda(_))
    ));
    let short = rand_vector(2, 11);
    assert!(matches!(
        regularized_inverse_apply(&svd, 1.0, &short),
        Err(Error::DimensionMismatch(_))
    ));
    // lambda = 0 on a rank-deficient matrix has no unique solution.
    let rank1 = &rand_vector(5, 12) * rand_vector(3, 13).transpose();
    let svd1 = thin_svd(&rank1).unwrap();
    assert!(matches!(
        regularized_inverse_apply(&svd1, 0.0, &v),
        Err(Error::SingularSystem(_))
    ));
}

#[test]
fn svd_rejects_empty_and_nonfinite() {
    assert!(thin_svd(&DMatrix::<f64>::zeros(0, 0)).is_err());
    let mut m = DMatrix::<f64>::zeros(2, 2);
    m[(0, 0)] = f64::NAN;
    assert!(thin_svd(&m).is_err());
}

fn arb_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    ((1usize..12, 1usize..12), any::<u64>()).prop_map(|((n, p), seed)| rand_matrix(n, p, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_factorization_contracts(m in arb_matrix()) {
        check_factorization(&m);
    }

    #[test]
    fn prop_regularized_inverse_vs_dense(seed in 0u64..10_000, lambda in 1e-3f64..1e3) {
        let m = rand_matrix(8, 5, seed);
        let v = rand_vector(5, seed ^ 0xabcd);
        let svd = thin_svd(&m).unwrap();
        let ours = regularized_inverse_apply(&svd, lambda, &v).unwrap();
        let oracle = dense_reg_solve(&(m.transpose() * &m), lambda, &v);
        prop_assert!((ours - &oracle).norm() < 1e-8 * (1.0 + oracle.norm()));
    }
}

#[test]
fn reconstruct_roundtrips_thin_svd_struct() {
    // A hand-built factorization reconstructs exactly.
    let svd = ThinSvd {
        left: DMatrix::identity(3, 2),
        singvals: DVector::from_vec(vec![3.0, 2.0]),
        right: DMatrix::identity(2, 2),
    };
    let rec = svd.reconstruct();
    assert_eq!(rec[(0, 0)], 3.0);
    assert_eq!(rec[(1, 1)], 2.0);
    assert_eq!(rec[(2, 0)], 0.0);
}
