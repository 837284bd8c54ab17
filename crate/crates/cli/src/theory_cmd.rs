//! `theory` subcommand: evaluate the closed-form orthogonal-design MSE
//! formulas on a θ grid and report each family's optimal penalty.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sketchridge_core::theory::{mse_orthogonal, orthogonal_report, Family, FamilyReport};

use crate::error::{CliError, CliResult};
use crate::io;

/// `sketchridge theory` arguments.
#[derive(Args, Debug)]
pub struct TheoryArgs {
    /// Sample size n
    #[arg(long)]
    pub n: usize,
    /// Dimension p (inferred from --beta-file when omitted)
    #[arg(long)]
    pub p: Option<usize>,
    /// Sketch rows q
    #[arg(long)]
    pub q: usize,
    /// Sparsity parameter s
    #[arg(long, default_value_t = 3.0)]
    pub s: f64,
    /// Noise variance σ²
    #[arg(long)]
    pub sigma2: f64,
    /// Signal strength b² = ‖β*‖²
    #[arg(long, conflicts_with = "beta_file")]
    pub b2: Option<f64>,
    /// Single-column CSV of β*; b² is its squared norm
    #[arg(long)]
    pub beta_file: Option<PathBuf>,
    /// Comma-separated θ values (θ = λ/n); default {0} plus 20 log-spaced in [0.01, 100]
    #[arg(long, conflicts_with = "lambda_list")]
    pub theta_list: Option<String>,
    /// Comma-separated unnormalized λ values, converted via θ = λ/n
    #[arg(long)]
    pub lambda_list: Option<String>,
    /// Output JSON path (stdout when omitted)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// One (θ, family) row of the oracle table.
#[derive(Debug, Serialize)]
struct TheoryRow {
    theta: f64,
    /// Unnormalized penalty λ = n·θ on the ridge scale.
    lambda: f64,
    family: Family,
    mse: f64,
    bias_sq: f64,
    var_trace: f64,
    /// MSE inflation over ridge at the same θ (zero for ridge itself).
    correction: f64,
}

/// The `theory` report.
#[derive(Debug, Serialize)]
struct TheoryOutput {
    n: usize,
    p: usize,
    q: usize,
    s: f64,
    b2: f64,
    sigma2: f64,
    theta_grid: Vec<f64>,
    rows: Vec<TheoryRow>,
    optima: Vec<FamilyReport>,
}

fn parse_nonneg_list(raw: &str, flag: &str) -> CliResult<Vec<f64>> {
    let mut values = Vec::new();
    for tok in raw.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| CliError::Usage(format!("{flag}: could not parse '{tok}' as a number")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(CliError::Usage(format!(
                "{flag}: values must be finite and nonnegative, got {v}"
            )));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Usage(format!("{flag}: no values supplied")));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    values.dedup();
    Ok(values)
}

fn default_theta_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let (lo, hi) = (1e-2f64.ln(), 1e2f64.ln());
    for i in 0..20 {
        grid.push((lo + (hi - lo) * i as f64 / 19.0).exp());
    }
    grid
}

/// Runs `sketchridge theory`.
pub fn run(args: &TheoryArgs) -> CliResult<()> {
    if args.n == 0 || args.q == 0 {
        return Err(CliError::Usage("--n and --q must be at least 1".into()));
    }
    if args.s < 1.0 || !args.s.is_finite() {
        return Err(CliError::Usage(format!("--s must be >= 1, got {}", args.s)));
    }
    if !args.sigma2.is_finite() || args.sigma2 <= 0.0 {
        return Err(CliError::Usage(format!(
            "--sigma2 must be positive and finite, got {}",
            args.sigma2
        )));
    }

    let (p, b2) = match (args.b2, &args.beta_file) {
        (Some(b2), None) => {
            if !b2.is_finite() || b2 <= 0.0 {
                return Err(CliError::Usage(format!(
                    "--b2 must be positive and finite, got {b2}"
                )));
            }
            let p = args
                .p
                .ok_or_else(|| CliError::Usage("--p is required with --b2".into()))?;
            (p, b2)
        }
        (None, Some(path)) => {
            let matrix = io::read_matrix_csv(path)?;
            if matrix.data.ncols() != 1 {
                return Err(CliError::Input(format!(
                    "{}: expected a single-column coefficient file, found {} columns",
                    path.display(),
                    matrix.data.ncols()
                )));
            }
            let p_file = matrix.data.nrows();
            if let Some(p_flag) = args.p {
                if p_flag != p_file {
                    return Err(CliError::Usage(format!(
                        "--p {p_flag} disagrees with the {p_file} coefficients in {}",
                        path.display()
                    )));
                }
            }
            (p_file, matrix.data.column(0).norm_squared())
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with prevents this"),
        (None, None) => {
            return Err(CliError::Usage(
                "one of --b2 or --beta-file is required".into(),
            ))
        }
    };
    if p == 0 || p > args.n {
        return Err(CliError::Usage(format!(
            "need 1 <= p <= n for the orthogonal design, got p={p}, n={}",
            args.n
        )));
    }

    let theta_grid = match (&args.theta_list, &args.lambda_list) {
        (Some(raw), None) => parse_nonneg_list(raw, "--theta-list")?,
        (None, Some(raw)) => parse_nonneg_list(raw, "--lambda-list")?
            .into_iter()
            .map(|l| l / args.n as f64)
            .collect(),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with prevents this"),
        (None, None) => default_theta_grid(),
    };

    let families = [Family::Ridge, Family::Fc, Family::Pc];
    let mut rows = Vec::with_capacity(theta_grid.len() * families.len());
    for &theta in &theta_grid {
        let ridge_mse = mse_orthogonal(
            theta,
            b2,
            args.sigma2,
            args.n,
            p,
            args.q,
            args.s,
            Family::Ridge,
        );
        for family in families {
            let mse = mse_orthogonal(theta, b2, args.sigma2, args.n, p, args.q, args.s, family);
            let bias_sq = b2 * theta * theta / ((1.0 + theta) * (1.0 + theta));
            rows.push(TheoryRow {
                theta,
                lambda: theta * args.n as f64,
                family,
                mse,
                bias_sq,
                var_trace: mse - bias_sq,
                correction: mse - ridge_mse,
            });
        }
    }

    let report = orthogonal_report(args.n, p, args.q, args.s, b2, args.sigma2);
    let output = TheoryOutput {
        n: args.n,
        p,
        q: args.q,
        s: args.s,
        b2,
        sigma2: args.sigma2,
        theta_grid,
        rows,
        optima: report.families,
    };
    io::emit_json(args.output.as_ref(), &output)
}
