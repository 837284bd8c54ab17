//! Sparse-Bernoulli sketch generation, application, and Gram moment law.

mod common;

use common::{rand_matrix, rand_vector};
use proptest::prelude::*;
use sketchridge_core::error::Error;
use sketchridge_core::sketch::{
    apply_sketch, apply_sketch_vec, generate_sketch, gram_moment_check, SketchSpec, SparseSketch,
};

#[test]
fn generation_is_pure_in_the_spec() {
    let spec = SketchSpec::new(50, 12, 3.0, 42).unwrap();
    let a = generate_sketch(&spec).unwrap();
    let b = generate_sketch(&spec).unwrap();
    assert_eq!(a, b);
    let c = generate_sketch(&SketchSpec::new(50, 12, 3.0, 43).unwrap()).unwrap();
    assert_ne!(a, c, "different seeds give different draws");
}

#[test]
fn s_equal_one_is_dense_with_half_magnitude() {
    // n=6, q=4, s=1: every cell is +-1, scaled by sqrt(1/4) = 1/2.
    let spec = SketchSpec::new(6, 4, 1.0, 7).unwrap();
    let q = generate_sketch(&spec).unwrap();
    assert_eq!(q.nnz(), 24);
    let dense = q.to_dense();
    for v in dense.iter() {
        assert_eq!(v.abs(), 0.5);
    }
}

#[test]
fn nnz_tracks_expected_density() {
    let spec = SketchSpec::new(500, 100, 3.0, 11).unwrap();
    let q = generate_sketch(&spec).unwrap();
    let expected = spec.expected_nnz();
    // Binomial(qn, 1/s) count: allow 4 standard deviations.
    let sd = (spec.q as f64 * spec.n as f64 * (1.0 / spec.s) * (1.0 - 1.0 / spec.s)).sqrt();
    assert!(
        (q.nnz() as f64 - expected).abs() < 4.0 * sd,
        "nnz {} vs expected {expected} (sd {sd})",
        q.nnz()
    );
}

#[test]
fn apply_matches_dense_multiply() {
    let spec = SketchSpec::new(30, 8, 2.5, 5).unwrap();
    let q = generate_sketch(&spec).unwrap();
    let m = rand_matrix(30, 4, 21);
    let v = rand_vector(30, 22);
    let dense = q.to_dense();
    assert!((apply_sketch(&q, &m).unwrap() - &dense * &m).norm() < 1e-12);
    assert!((apply_sketch_vec(&q, &v).unwrap() - &dense * &v).norm() < 1e-12);
}

#[test]
fn apply_is_bitwise_identical_across_thread_counts() {
    let spec = SketchSpec::new(200, 40, 3.0, 9).unwrap();
    let m = rand_matrix(200, 6, 31);

    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let (q1, r1) = single.install(|| {
        let q = generate_sketch(&spec).unwrap();
        let r = apply_sketch(&q, &m).unwrap();
        (q, r)
    });

    let eight = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap();
    let (q8, r8) = eight.install(|| {
        let q = generate_sketch(&spec).unwrap();
        let r = apply_sketch(&q, &m).unwrap();
        (q, r)
    });

    assert_eq!(q1, q8, "generation independent of thread count");
    assert_eq!(r1, r8, "multiplication bitwise independent of thread count");
}

#[test]
fn identity_sketch_reproduces_input() {
    let q = SparseSketch::identity(12).unwrap();
    let m = rand_matrix(12, 5, 51);
    assert_eq!(apply_sketch(&q, &m).unwrap(), m);
}

#[test]
fn wide_specs_are_allowed() {
    // q may exceed n (oversampled Gram diagnostics).
    let spec = SketchSpec::new(4, 8, 3.0, 0).unwrap();
    let q = generate_sketch(&spec).unwrap();
    assert_eq!(q.to_dense().nrows(), 8);
}

#[test]
fn spec_json_shape_roundtrips() {
    let spec: SketchSpec = serde_json::from_str(r#"{"n":4,"q":8,"s":3.0,"seed":42}"#).unwrap();
    assert_eq!(spec, SketchSpec::new(4, 8, 3.0, 42).unwrap());
    let text = serde_json::to_string(&spec).unwrap();
    let back: SketchSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
}

#[test]
fn moment_check_tracks_analytic_law() {
    // Moderate Monte Carlo: the full-strength version is an acceptance
    // criterion; here we check the machinery with 5 standard errors.
    let spec = SketchSpec::new(6, 20, 3.0, 123).unwrap();
    let report = gram_moment_check(&spec, 6000).unwrap();
    assert_eq!(report.draws, 6000);
    assert!((report.analytic_var_diag - 0.1).abs() < 1e-15);
    assert!((report.analytic_var_offdiag - 0.05).abs() < 1e-15);

    for i in 0..6 {
        for j in 0..6 {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (report.mean[(i, j)] - target).abs();
            assert!(
                dev <= 5.0 * report.mean_se[(i, j)],
                "mean[{i},{j}] off: {dev} vs se {}",
                report.mean_se[(i, j)]
            );
            let vtarget = if i == j {
                report.analytic_var_diag
            } else {
                report.analytic_var_offdiag
            };
            let vdev = (report.var[(i, j)] - vtarget).abs();
            assert!(
                vdev <= 5.0 * report.var_se[(i, j)],
                "var[{i},{j}] off: {vdev} vs se {}",
                report.var_se[(i, j)]
            );
        }
    }
}

#[test]
fn moment_check_gram_is_symmetric_so_transpose_cov_is_var() {
    // Cov(A_ij, A_ji) = Var(A_ij) holds identically because A = Q^T Q is
    // symmetric; the report exposes the analytic value for reference.
    let spec = SketchSpec::new(3, 10, 2.0, 5).unwrap();
    let report = gram_moment_check(&spec, 100).unwrap();
    assert_eq!(report.analytic_cov_transpose, report.analytic_var_offdiag);
    assert!((report.mean[(0, 1)] - report.mean[(1, 0)]).abs() < 1e-15);
}

#[test]
fn from_triplets_validates_ranges_and_signs() {
    let spec = SketchSpec::new(3, 2, 1.5, 0).unwrap();
    assert!(matches!(
        SparseSketch::from_triplets(spec, &[(2, 0, 1)]),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        SparseSketch::from_triplets(spec, &[(0, 3, 1)]),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        SparseSketch::from_triplets(spec, &[(0, 0, 2)]),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn apply_rejects_wrong_height() {
    let spec = SketchSpec::new(10, 4, 2.0, 1).unwrap();
    let q = generate_sketch(&spec).unwrap();
    let m = rand_matrix(9, 2, 3);
    assert!(matches!(
        apply_sketch(&q, &m),
        Err(Error::DimensionMismatch(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_generated_sketches_are_well_formed(
        n in 1usize..40,
        q in 1usize..40,
        s in 1.0f64..6.0,
        seed in any::<u64>(),
    ) {
        let spec = SketchSpec::new(n, q, s, seed).unwrap();
        let sk = generate_sketch(&spec).unwrap();
        prop_assert!((sk.scale - (s / q as f64).sqrt()).abs() < 1e-15);
        prop_assert!(sk.nnz() <= n * q);
        let mut last: Option<(usize, usize)> = None;
        for (i, j, sign) in sk.entries() {
            prop_assert!(sign == 1 || sign == -1);
            prop_assert!(i < q && j < n);
            if let Some(prev) = last {
                prop_assert!(prev < (i, j), "entries strictly ordered row-major");
            }
            last = Some((i, j));
        }
    }

    #[test]
    fn prop_apply_agrees_with_dense(seed in any::<u64>()) {
        let spec = SketchSpec::new(12, 5, 2.0, seed).unwrap();
        let sk = generate_sketch(&spec).unwrap();
        let m = rand_matrix(12, 3, seed ^ 0x5555);
        let dense = sk.to_dense();
        prop_assert!((apply_sketch(&sk, &m).unwrap() - dense * m).norm() < 1e-12);
    }
}
