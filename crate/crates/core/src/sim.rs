//! Simulation harness: synthetic-data generation, paired method comparison
//! along a λ grid, GCV-vs-oracle tuning evaluation, and win-proportion
//! tables.
//!
//! Every replication derives its own seeds for the design, coefficients,
//! noise, sketch, and test set from the base seed, so replications are
//! independent, reproducible, and parallelizable; within a replication all
//! methods consume the same draws, making the comparisons paired.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    build_compressed, fit_ols, fit_path, fit_ridge, Dataset, Method, PathOptions,
};
use crate::linalg::thin_svd;
use crate::rng::derive_seed;
use crate::sketch::{generate_sketch, SketchSpec};
use crate::theory::bayes_theta_star;
use crate::tuning::{default_lambda_grid, record_for, select_lambda, Criterion, DEFAULT_GRID_SIZE};

/// Seed-stream tags. Each random object consumed by a replication lives in
/// its own derived stream so scenarios can be swapped without disturbing
/// the other draws.
const STREAM_DESIGN: u64 = 1;
const STREAM_BETA: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_SKETCH: u64 = 4;
const STREAM_TEST_DESIGN: u64 = 5;
const STREAM_TEST_NOISE: u64 = 6;

/// How the true coefficient vector is generated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BetaScenario {
    /// i.i.d. centered Gaussian coordinates with variance `tau2`
    /// (default `pi/2`, which normalizes `E|beta_j|` to 1).
    Gaussian {
        /// Per-coordinate prior variance.
        #[serde(default = "default_tau2")]
        tau2: f64,
    },
    /// Every coordinate equal to 1.
    AllOnes,
    /// Coordinates alternating +1, -1, +1, ...
    Alternating,
}

fn default_tau2() -> f64 {
    std::f64::consts::FRAC_PI_2
}

/// Full description of a simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Training observations per replication.
    pub n: usize,
    /// Predictors.
    pub p: usize,
    /// Equicorrelation of the design rows, in `[0, 1)`.
    pub rho: f64,
    /// Coefficient scenario.
    pub beta_scenario: BetaScenario,
    /// Noise standard deviation (0 gives a noiseless run).
    pub sigma: f64,
    /// Sketch sizes to sweep.
    pub q_list: Vec<usize>,
    /// Sketch sparsity parameter.
    pub s: f64,
    /// λ grid; when absent, a default grid is derived from replication 0's
    /// sketched design (at the first `q`) and shared by all replications.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    /// Number of replications.
    pub replications: usize,
    /// Base seed; all streams derive from it.
    pub seed: u64,
    /// Test-set size for prediction-error metrics (0 disables them).
    #[serde(default)]
    pub test_n: usize,
    /// Reuse replication 0's design in every replication (coefficients,
    /// noise, sketches, and test sets are still redrawn).
    #[serde(default)]
    pub fixed_design: bool,
    /// Methods to report (default: all).
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
}

impl SimConfig {
    /// Desk-scale defaults: n=1000, p=20, rho=0.2, Gaussian coefficients,
    /// sigma=50, q in {100, 200, 300}, s=3, 50 replications, a test set the
    /// size of the training set.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            n: 1000,
            p: 20,
            rho: 0.2,
            beta_scenario: BetaScenario::Gaussian {
                tau2: default_tau2(),
            },
            sigma: 50.0,
            q_list: vec![100, 200, 300],
            s: 3.0,
            lambda_grid: None,
            replications: 50,
            seed,
            test_n: 1000,
            fixed_design: false,
            methods: None,
        }
    }

    /// Checks the config invariants.
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n <= self.p {
            return Err(Error::InvalidConfig(format!(
                "need n > p >= 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        if let BetaScenario::Gaussian { tau2 } = self.beta_scenario {
            if !tau2.is_finite() || tau2 <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "gaussian scenario needs tau2 > 0, got {tau2}"
                )));
            }
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.q_list.is_empty() || self.q_list.contains(&0) {
            return Err(Error::InvalidConfig(
                "q_list must hold positive sizes".into(),
            ));
        }
        if !self.s.is_finite() || self.s < 1.0 {
            return Err(Error::InvalidSparsity(self.s));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() {
                return Err(Error::InvalidConfig("lambda_grid must be nonempty".into()));
            }
            if grid.iter().any(|l| !l.is_finite() || *l <= 0.0) {
                return Err(Error::InvalidConfig(
                    "lambda_grid entries must be positive and finite".into(),
                ));
            }
            if grid.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidConfig(
                    "lambda_grid must be sorted ascending".into(),
                ));
            }
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if let Some(methods) = &self.methods {
            if methods.is_empty() {
                return Err(Error::InvalidConfig(
                    "methods, when given, must be nonempty".into(),
                ));
            }
        }
        Ok(())
    }

    fn active_methods(&self) -> Vec<Method> {
        match &self.methods {
            Some(ms) => {
                // Keep canonical order and drop duplicates.
                Method::ALL
                    .iter()
                    .copied()
                    .filter(|m| ms.contains(m))
                    .collect()
            }
            None => Method::ALL.to_vec(),
        }
    }
}

/// Equicorrelated Gaussian design: rows i.i.d. `N(0, (1-rho) I + rho 11^T)`,
/// each row generated as `sqrt(1-rho) z + sqrt(rho) w 1` with `z` a standard
/// normal vector and `w` a standard normal scalar.
///
/// # Errors
///
/// `InvalidInput` unless `rho` lies in `[0, 1)`.
pub fn gen_design(n: usize, p: usize, rho: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidInput(format!(
            "gen_design: rho must lie in [0, 1), got {rho}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (1.0 - rho).sqrt();
    let b = rho.sqrt();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(i, j)] = a * z;
        }
        let w: f64 = StandardNormal.sample(&mut rng);
        for j in 0..p {
            x[(i, j)] += b * w;
        }
    }
    Ok(x)
}

/// True coefficient vector for one scenario.
pub fn gen_beta(scenario: BetaScenario, p: usize, seed: u64) -> DVector<f64> {
    match scenario {
        BetaScenario::Gaussian { tau2 } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tau = tau2.sqrt();
            DVector::from_fn(p, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                tau * z
            })
        }
        BetaScenario::AllOnes => DVector::from_element(p, 1.0),
        BetaScenario::Alternating => {
            DVector::from_fn(p, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 })
        }
    }
}

/// Response `Y = X beta_star + sigma eps` with i.i.d. standard normal noise.
pub fn gen_response(
    x: &DMatrix<f64>,
    beta_star: &DVector<f64>,
    sigma: f64,
    seed: u64,
) -> DVector<f64> {
    let mut y = x * beta_star;
    if sigma != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..y.len() {
            let z: f64 = StandardNormal.sample(&mut rng);
            y[i] += sigma * z;
        }
    }
    y
}

/// One method's results in one replication.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodRepOutcome {
    /// Estimation error `||beta_hat(lambda) - beta*||^2` per grid point
    /// (a single entry for OLS, which has no penalty).
    pub est_mse_per_lambda: Vec<f64>,
    /// The selected penalty (grid GCV, or the fixed Bayes value for ridge
    /// under the Gaussian scenario; absent for OLS).
    pub selected_lambda: Option<f64>,
    /// Estimation error at the selected penalty.
    pub est_mse_selected: f64,
    /// Mean squared test-set prediction error per grid point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_mse_per_lambda: Option<Vec<f64>>,
    /// Test error at the selected penalty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_mse_selected: Option<f64>,
    /// Smallest test error over the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_mse_min: Option<f64>,
    /// `test_mse_selected / test_mse_min`; at least 1 whenever the
    /// selection was made on the same grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcv_ratio: Option<f64>,
}

/// All methods' results for one `(replication, q)` cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepOutcome {
    /// Replication index.
    pub rep: usize,
    /// Sketch size.
    pub q: usize,
    /// Per-method outcomes.
    pub per_method: BTreeMap<Method, MethodRepOutcome>,
    /// Method with the smallest estimation error at its own selected
    /// penalty (ties break to the earliest method in canonical order).
    pub winner: Method,
}

/// Median and quartiles of one metric over replications.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuartileSummary {
    /// 25% quantile.
    pub q1: f64,
    /// Median.
    pub median: f64,
    /// 75% quantile.
    pub q3: f64,
}

/// Estimation-error summary for one `(q, method, lambda)` cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodLambdaSummary {
    /// Sketch size.
    pub q: usize,
    /// Method.
    pub method: Method,
    /// Grid penalty (absent for OLS).
    pub lambda: Option<f64>,
    /// Summary of `log10 ||beta_hat - beta*||^2` over replications.
    pub log10_est_mse: QuartileSummary,
    /// Median of the raw (unlogged) estimation error.
    pub median_est_mse: f64,
}

/// Per-`(q, method)` summary at the selected penalty.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodSummary {
    /// Sketch size.
    pub q: usize,
    /// Method.
    pub method: Method,
    /// Summary of the estimation error at the selected penalty.
    pub est_mse_selected: QuartileSummary,
    /// Median `test_selected / test_min` ratio, when a test set was drawn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_gcv_ratio: Option<f64>,
    /// Replications this method won.
    pub win_count: usize,
    /// `win_count / replications`.
    pub win_proportion: f64,
}

/// Aggregated simulation results.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    /// The configuration that produced the report.
    pub config: SimConfig,
    /// The shared λ grid.
    pub lambda_grid: Vec<f64>,
    /// Methods compared, in canonical order.
    pub methods: Vec<Method>,
    /// Per-λ estimation summaries.
    pub per_lambda: Vec<MethodLambdaSummary>,
    /// Per-method summaries at the selected penalty.
    pub per_method: Vec<MethodSummary>,
    /// Wall-clock runtime; omitted when the caller strips timing for
    /// byte-reproducible output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

/// A finished run: the aggregate report plus the per-replication rows it
/// was computed from (the CLI flattens these to CSV).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimRun {
    /// Aggregated report.
    pub report: SimReport,
    /// One row per `(replication, q)`.
    pub reps: Vec<RepOutcome>,
}

/// Runs one replication at one sketch size against a shared λ grid.
///
/// # Errors
///
/// Propagates generation and fitting failures.
pub fn run_replication(
    cfg: &SimConfig,
    rep: usize,
    q: usize,
    lambda_grid: &[f64],
    methods: &[Method],
) -> Result<RepOutcome> {
    let design_rep = if cfg.fixed_design { 0 } else { rep };
    let x = gen_design(
        cfg.n,
        cfg.p,
        cfg.rho,
        derive_seed(cfg.seed, &[STREAM_DESIGN, design_rep as u64]),
    )?;
    let beta_star = gen_beta(
        cfg.beta_scenario,
        cfg.p,
        derive_seed(cfg.seed, &[STREAM_BETA, rep as u64]),
    );
    let y = gen_response(
        &x,
        &beta_star,
        cfg.sigma,
        derive_seed(cfg.seed, &[STREAM_NOISE, rep as u64]),
    );
    let data = Dataset::new(x, y)?;

    let spec = SketchSpec::new(
        cfg.n,
        q,
        cfg.s,
        derive_seed(cfg.seed, &[STREAM_SKETCH, rep as u64, q as u64]),
    )?;
    let sketch = generate_sketch(&spec)?;
    let cd = build_compressed(&data, &sketch)?;

    let want_ridge = methods.contains(&Method::Ridge);
    let path = fit_path(
        &cd,
        &data,
        lambda_grid,
        &PathOptions {
            with_ridge: want_ridge,
        },
    )?;

    let test = if cfg.test_n > 0 {
        let xt = gen_design(
            cfg.test_n,
            cfg.p,
            cfg.rho,
            derive_seed(cfg.seed, &[STREAM_TEST_DESIGN, rep as u64]),
        )?;
        let yt = gen_response(
            &xt,
            &beta_star,
            cfg.sigma,
            derive_seed(cfg.seed, &[STREAM_TEST_NOISE, rep as u64]),
        );
        Some((xt, yt))
    } else {
        None
    };
    let test_mse = |beta: &DVector<f64>| -> Option<f64> {
        test.as_ref()
            .map(|(xt, yt)| (yt - xt * beta).norm_squared() / yt.len() as f64)
    };

    // The Bayes penalty for the ridge arm under the Gaussian scenario:
    // theta* = sigma^2/(n tau2) per observation, so n theta* = sigma^2/tau2
    // on the unnormalized objective.
    let bayes_lambda = match cfg.beta_scenario {
        BetaScenario::Gaussian { tau2 } if cfg.sigma > 0.0 => {
            Some(cfg.n as f64 * bayes_theta_star(cfg.sigma * cfg.sigma, tau2, cfg.n))
        }
        _ => None,
    };

    let mut per_method = BTreeMap::new();
    for &method in methods {
        let outcome = match method {
            Method::Ols => {
                let beta = fit_ols(&data)?;
                let err = (&beta - &beta_star).norm_squared();
                MethodRepOutcome {
                    est_mse_per_lambda: vec![err],
                    selected_lambda: None,
                    est_mse_selected: err,
                    test_mse_per_lambda: test_mse(&beta).map(|t| vec![t]),
                    test_mse_selected: test_mse(&beta),
                    test_mse_min: test_mse(&beta),
                    gcv_ratio: None,
                }
            }
            Method::Ridge if bayes_lambda.is_some() => {
                // Fixed Bayes penalty, fit off-grid; the per-λ curve still
                // tracks the grid for plotting.
                let lambda = bayes_lambda.expect("checked above");
                let beta = fit_ridge(&data, lambda)?;
                let est: Vec<f64> = path
                    .iter()
                    .map(|f| {
                        (f.beta_ridge.as_ref().expect("ridge on path") - &beta_star).norm_squared()
                    })
                    .collect();
                let test_per: Option<Vec<f64>> = test.as_ref().map(|_| {
                    path.iter()
                        .map(|f| test_mse(f.beta_ridge.as_ref().expect("ridge on path")).unwrap())
                        .collect()
                });
                MethodRepOutcome {
                    est_mse_per_lambda: est,
                    selected_lambda: Some(lambda),
                    est_mse_selected: (&beta - &beta_star).norm_squared(),
                    test_mse_selected: test_mse(&beta),
                    test_mse_min: test_per
                        .as_ref()
                        .map(|v| v.iter().copied().fold(f64::INFINITY, f64::min)),
                    test_mse_per_lambda: test_per,
                    // The selection is off-grid, so the on-grid minimum is
                    // not a lower bound for it; no ratio is reported.
                    gcv_ratio: None,
                }
            }
            _ => {
                let records: Vec<_> = path
                    .iter()
                    .map(|f| record_for(f, method, cfg.n, None))
                    .collect::<Result<_>>()?;
                let (sel_lambda, _) = select_lambda(&records, Criterion::Gcv)?;
                let sel_idx = lambda_grid
                    .iter()
                    .position(|&l| l == sel_lambda)
                    .expect("selected lambda comes from the grid");
                let beta_at = |f: &crate::estimators::FitResult| -> DVector<f64> {
                    match method {
                        Method::Ridge => f.beta_ridge.clone().expect("ridge on path"),
                        Method::Fc => f.beta_fc.clone(),
                        Method::Pc => f.beta_pc.clone(),
                        Method::ComboLinear => f.beta_combo_linear.clone(),
                        Method::ComboConvex => f.beta_combo_convex.clone(),
                        Method::Ols => unreachable!("handled above"),
                    }
                };
                let est: Vec<f64> = path
                    .iter()
                    .map(|f| (beta_at(f) - &beta_star).norm_squared())
                    .collect();
                let test_per: Option<Vec<f64>> = test.as_ref().map(|_| {
                    path.iter()
                        .map(|f| test_mse(&beta_at(f)).unwrap())
                        .collect()
                });
                let test_min = test_per
                    .as_ref()
                    .map(|v| v.iter().copied().fold(f64::INFINITY, f64::min));
                let test_sel = test_per.as_ref().map(|v| v[sel_idx]);
                let ratio = match (test_sel, test_min) {
                    (Some(sel), Some(min)) if min > 0.0 => Some(sel / min),
                    _ => None,
                };
                if let Some(r) = ratio {
                    debug_assert!(
                        r >= 1.0 - 1e-12,
                        "grid selection can never beat the grid minimum"
                    );
                }
                MethodRepOutcome {
                    est_mse_selected: est[sel_idx],
                    est_mse_per_lambda: est,
                    selected_lambda: Some(sel_lambda),
                    test_mse_per_lambda: test_per,
                    test_mse_selected: test_sel,
                    test_mse_min: test_min,
                    gcv_ratio: ratio,
                }
            }
        };
        per_method.insert(method, outcome);
    }

    // Winner: smallest estimation error at the method's own selection;
    // canonical order breaks ties.
    let winner = methods
        .iter()
        .copied()
        .min_by(|a, b| {
            per_method[a]
                .est_mse_selected
                .partial_cmp(&per_method[b].est_mse_selected)
                .expect("finite errors")
        })
        .expect("at least one method");

    Ok(RepOutcome {
        rep,
        q,
        per_method,
        winner,
    })
}

/// Runs the full simulation: resolves the shared λ grid, executes all
/// `(replication, q)` cells in parallel, and aggregates in deterministic
/// order.
///
/// # Errors
///
/// `InvalidConfig` for a bad configuration; propagated failures otherwise.
pub fn run_sim(cfg: &SimConfig) -> Result<SimRun> {
    cfg.validate()?;
    let start = Instant::now();
    let methods = cfg.active_methods();

    let lambda_grid: Vec<f64> = match &cfg.lambda_grid {
        Some(grid) => grid.clone(),
        None => {
            // Derive the default grid from replication 0's draw at the
            // first sketch size, then share it everywhere.
            let x0 = gen_design(
                cfg.n,
                cfg.p,
                cfg.rho,
                derive_seed(cfg.seed, &[STREAM_DESIGN, 0]),
            )?;
            let q0 = cfg.q_list[0];
            let spec = SketchSpec::new(
                cfg.n,
                q0,
                cfg.s,
                derive_seed(cfg.seed, &[STREAM_SKETCH, 0, q0 as u64]),
            )?;
            let sketch = generate_sketch(&spec)?;
            let qx = crate::sketch::apply_sketch(&sketch, &x0)?;
            default_lambda_grid(&thin_svd(&qx)?, DEFAULT_GRID_SIZE)
        }
    };

    let cells: Vec<(usize, usize)> = (0..cfg.replications)
        .flat_map(|rep| cfg.q_list.iter().map(move |&q| (rep, q)))
        .collect();
    let reps: Vec<RepOutcome> = cells
        .par_iter()
        .map(|&(rep, q)| run_replication(cfg, rep, q, &lambda_grid, &methods))
        .collect::<Result<_>>()?;

    let report = aggregate(cfg, &lambda_grid, &methods, &reps)?;
    Ok(SimRun {
        report: SimReport {
            runtime_seconds: Some(start.elapsed().as_secs_f64()),
            ..report
        },
        reps,
    })
}

/// Aggregates per-replication outcomes into the summary report.
///
/// # Errors
///
/// `InvalidInput` when `reps` is empty.
pub fn aggregate(
    cfg: &SimConfig,
    lambda_grid: &[f64],
    methods: &[Method],
    reps: &[RepOutcome],
) -> Result<SimReport> {
    if reps.is_empty() {
        return Err(Error::InvalidInput("aggregate: no replications".into()));
    }
    let mut per_lambda = Vec::new();
    let mut per_method = Vec::new();

    for &q in &cfg.q_list {
        let rows: Vec<&RepOutcome> = reps.iter().filter(|r| r.q == q).collect();
        let n_reps = rows.len();
        let mut wins: BTreeMap<Method, usize> = methods.iter().map(|&m| (m, 0)).collect();
        for row in &rows {
            *wins.get_mut(&row.winner).expect("winner is active") += 1;
        }
        debug_assert_eq!(
            wins.values().sum::<usize>(),
            n_reps,
            "win counts must sum to the replication count"
        );

        for &method in methods {
            // Per-λ summaries (a single unindexed row for OLS).
            let grid_len = rows
                .first()
                .map(|r| r.per_method[&method].est_mse_per_lambda.len())
                .unwrap_or(0);
            for (idx, &lambda) in lambda_grid.iter().enumerate().take(grid_len) {
                let values: Vec<f64> = rows
                    .iter()
                    .map(|r| r.per_method[&method].est_mse_per_lambda[idx])
                    .collect();
                let logs: Vec<f64> = values
                    .iter()
                    .map(|v| v.max(f64::MIN_POSITIVE).log10())
                    .collect();
                per_lambda.push(MethodLambdaSummary {
                    q,
                    method,
                    lambda: (method != Method::Ols).then_some(lambda),
                    log10_est_mse: quartiles(&logs),
                    median_est_mse: quartiles(&values).median,
                });
            }

            let selected: Vec<f64> = rows
                .iter()
                .map(|r| r.per_method[&method].est_mse_selected)
                .collect();
            let ratios: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.per_method[&method].gcv_ratio)
                .collect();
            per_method.push(MethodSummary {
                q,
                method,
                est_mse_selected: quartiles(&selected),
                median_gcv_ratio: if ratios.is_empty() {
                    None
                } else {
                    Some(quartiles(&ratios).median)
                },
                win_count: wins[&method],
                win_proportion: wins[&method] as f64 / n_reps as f64,
            });
        }
    }

    Ok(SimReport {
        config: cfg.clone(),
        lambda_grid: lambda_grid.to_vec(),
        methods: methods.to_vec(),
        per_lambda,
        per_method,
        runtime_seconds: None,
    })
}

/// Type-7 (linear interpolation) quantiles of an unsorted sample.
fn quartiles(values: &[f64]) -> QuartileSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metric values"));
    QuartileSummary {
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
    }
}

fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = (m - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}
