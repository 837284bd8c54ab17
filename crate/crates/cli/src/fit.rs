//! `fit` subcommand: load CSV data, compress, fit the estimator family
//! along a λ grid, select by GCV or Cp, and emit a JSON report.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use sketchridge_core::estimators::{
    build_compressed, fit_ols, fit_path, CompressedDesign, FitResult, Method, PathOptions,
};
use sketchridge_core::linalg::thin_svd;
use sketchridge_core::sketch::{generate_sketch, SketchSpec, SparseSketch};
use sketchridge_core::tuning::{record_for, select_lambda, Criterion, TuningRecord};

use crate::error::{CliError, CliResult};
use crate::io;

/// Flags naming the input data.
#[derive(Args, Debug)]
pub struct DataArgs {
    /// Input CSV of predictors (optionally containing the response column)
    #[arg(long)]
    pub input: PathBuf,
    /// Response column of the input: a header name or a 0-based index
    #[arg(long)]
    pub response_col: Option<String>,
    /// Separate single-column response CSV
    #[arg(long)]
    pub response: Option<PathBuf>,
}

/// Flags describing the sketch.
#[derive(Args, Debug)]
pub struct SketchFlags {
    /// Sketch rows q (required unless --identity-sketch)
    #[arg(long, conflicts_with = "identity_sketch")]
    pub q: Option<usize>,
    /// Sparsity parameter s: entries are nonzero with probability 1/s
    #[arg(long, default_value_t = 3.0)]
    pub s: f64,
    /// Sketch seed (falls back to SKETCHRIDGE_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip compression and use the identity sketch (test hook)
    #[arg(long)]
    pub identity_sketch: bool,
}

/// Flags describing the λ grid.
#[derive(Args, Debug)]
pub struct GridFlags {
    /// Smallest λ of an explicit log-spaced grid
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Largest λ of an explicit log-spaced grid
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Number of grid points (default 50)
    #[arg(long)]
    pub lambda_count: Option<usize>,
}

/// Flags controlling output.
#[derive(Args, Debug)]
pub struct OutputFlags {
    /// Output JSON path (stdout when omitted)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Cap the worker-thread count
    #[arg(long)]
    pub threads: Option<usize>,
    /// Omit wall-clock timing so outputs are byte-reproducible
    #[arg(long)]
    pub no_timing: bool,
}

/// Selection criterion flag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum CriterionArg {
    /// Generalized cross-validation (needs no noise-variance estimate).
    #[default]
    Gcv,
    /// Cp-style risk estimate (needs --sigma2).
    Cp,
}

impl CriterionArg {
    pub fn to_core(self) -> Criterion {
        match self {
            CriterionArg::Gcv => Criterion::Gcv,
            CriterionArg::Cp => Criterion::Cp,
        }
    }
}

/// `sketchridge fit` arguments.
#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sketch: SketchFlags,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub out: OutputFlags,
    /// Comma-separated methods (default: all of ols,ridge,fc,pc,combo_linear,combo_convex)
    #[arg(long)]
    pub methods: Option<String>,
    /// Penalty-selection criterion
    #[arg(long, value_enum, default_value_t)]
    pub criterion: CriterionArg,
    /// Noise-variance estimate for the Cp criterion
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Include per-λ coefficient vectors in the path section
    #[arg(long)]
    pub emit_coefficients: bool,
}

/// Sketch description echoed into reports.
#[derive(Clone, Debug, Serialize)]
pub struct SketchInfo {
    /// Whether the identity sketch was used.
    pub identity: bool,
    /// Original row count.
    pub n: usize,
    /// Sketch rows.
    pub q: usize,
    /// Sparsity parameter (absent for the identity sketch).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Sketch seed (absent for the identity sketch).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One selected fit.
#[derive(Debug, Serialize)]
struct Selection {
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    df: f64,
    rss: f64,
    /// Criterion value at the selected λ (absent for OLS).
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    /// Combination weights, ordered (FC, PC).
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<[f64; 2]>,
    coefficients: Vec<f64>,
}

/// One method's record at one grid point.
#[derive(Debug, Serialize)]
struct PathRecord {
    method: Method,
    df: f64,
    rss: f64,
    gcv: Option<f64>,
    risk_cp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct PathRow {
    lambda: f64,
    records: Vec<PathRecord>,
}

/// The `fit` report.
#[derive(Debug, Serialize)]
struct FitOutput {
    n: usize,
    p: usize,
    features: Vec<String>,
    response: String,
    sketch: SketchInfo,
    criterion: Criterion,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    lambda_grid: Vec<f64>,
    methods: Vec<Method>,
    selections: Vec<Selection>,
    path: Vec<PathRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_seconds: Option<f64>,
}

/// Everything the fit/tune pipelines share: loaded data, the sketch, the
/// compressed design, and the resolved grid.
pub struct Prepared {
    pub loaded: io::LoadedDataset,
    pub sketch_info: SketchInfo,
    pub cd: CompressedDesign,
    pub grid: Vec<f64>,
}

/// Loads the dataset, builds the sketch, compresses, and resolves the grid.
pub fn prepare(data: &DataArgs, sketch: &SketchFlags, grid: &GridFlags) -> CliResult<Prepared> {
    let loaded = io::load_dataset(
        &data.input,
        data.response_col.as_deref(),
        data.response.as_deref(),
    )?;
    let n = loaded.data.n();

    let (sk, sketch_info) = if sketch.identity_sketch {
        (
            SparseSketch::identity(n)?,
            SketchInfo {
                identity: true,
                n,
                q: n,
                s: None,
                seed: None,
            },
        )
    } else {
        let q = sketch.q.ok_or_else(|| {
            CliError::Usage("--q is required unless --identity-sketch is set".into())
        })?;
        let seed = io::resolve_seed(sketch.seed)?;
        let spec = SketchSpec::new(n, q, sketch.s, seed)?;
        (
            generate_sketch(&spec)?,
            SketchInfo {
                identity: false,
                n,
                q,
                s: Some(sketch.s),
                seed: Some(seed),
            },
        )
    };

    let cd = build_compressed(&loaded.data, &sk)?;
    let lambda_grid = io::resolve_lambda_grid(
        &cd.qx_svd,
        grid.lambda_min,
        grid.lambda_max,
        grid.lambda_count,
    )?;
    Ok(Prepared {
        loaded,
        sketch_info,
        cd,
        grid: lambda_grid,
    })
}

/// Validates the criterion/sigma2 pairing and returns the variance estimate.
pub fn check_criterion(criterion: CriterionArg, sigma2: Option<f64>) -> CliResult<Option<f64>> {
    if let Some(s2) = sigma2 {
        if !s2.is_finite() || s2 <= 0.0 {
            return Err(CliError::Usage(format!(
                "--sigma2 must be positive and finite, got {s2}"
            )));
        }
    }
    if criterion == CriterionArg::Cp && sigma2.is_none() {
        return Err(CliError::Usage(
            "--criterion cp needs a noise-variance estimate via --sigma2".into(),
        ));
    }
    Ok(sigma2)
}

fn criterion_score(rec: &TuningRecord, criterion: Criterion) -> Option<f64> {
    match criterion {
        Criterion::Gcv => rec.gcv,
        Criterion::Cp => rec.risk_cp,
    }
}

fn beta_of(fit: &FitResult, method: Method) -> Vec<f64> {
    let v = match method {
        Method::Fc => &fit.beta_fc,
        Method::Pc => &fit.beta_pc,
        Method::ComboLinear => &fit.beta_combo_linear,
        Method::ComboConvex => &fit.beta_combo_convex,
        Method::Ridge => fit.beta_ridge.as_ref().expect("ridge requested on path"),
        Method::Ols => unreachable!("ols is not on the path"),
    };
    v.iter().copied().collect()
}

fn alpha_of(fit: &FitResult, method: Method) -> Option<[f64; 2]> {
    match method {
        Method::ComboLinear => Some(fit.alpha_linear),
        Method::ComboConvex => Some([fit.alpha_convex, 1.0 - fit.alpha_convex]),
        _ => None,
    }
}

/// Runs `sketchridge fit`.
pub fn run(args: &FitArgs) -> CliResult<()> {
    let start = Instant::now();
    io::configure_threads(args.out.threads)?;
    let sigma2 = check_criterion(args.criterion, args.sigma2)?;
    let criterion = args.criterion.to_core();
    let methods = io::parse_methods(args.methods.as_deref())?;

    let prepared = prepare(&args.data, &args.sketch, &args.grid)?;
    let data = &prepared.loaded.data;
    let n = data.n();
    let want_ridge = methods.contains(&Method::Ridge);
    let path = fit_path(
        &prepared.cd,
        data,
        &prepared.grid,
        &PathOptions {
            with_ridge: want_ridge,
        },
    )?;

    let mut selections = Vec::new();
    for &method in &methods {
        if method == Method::Ols {
            let beta = fit_ols(data)?;
            let rss = (&data.y - &data.x * &beta).norm_squared();
            let rank = thin_svd(&data.x)?.rank();
            selections.push(Selection {
                method,
                lambda: None,
                df: rank as f64,
                rss,
                score: None,
                alpha: None,
                coefficients: beta.iter().copied().collect(),
            });
            continue;
        }
        let records: Vec<TuningRecord> = path
            .iter()
            .map(|f| record_for(f, method, n, sigma2))
            .collect::<Result<_, _>>()?;
        let (lambda, rec) = select_lambda(&records, criterion)?;
        let idx = prepared
            .grid
            .iter()
            .position(|&l| l == lambda)
            .expect("selected lambda comes from the grid");
        let fit = &path[idx];
        selections.push(Selection {
            method,
            lambda: Some(lambda),
            df: rec.df,
            rss: rec.rss,
            score: criterion_score(&rec, criterion),
            alpha: alpha_of(fit, method),
            coefficients: beta_of(fit, method),
        });
    }

    let path_rows: Vec<PathRow> = path
        .iter()
        .map(|fit| {
            let records = methods
                .iter()
                .filter(|&&m| m != Method::Ols)
                .map(|&method| {
                    let rec = record_for(fit, method, n, sigma2)?;
                    Ok(PathRecord {
                        method,
                        df: rec.df,
                        rss: rec.rss,
                        gcv: rec.gcv,
                        risk_cp: rec.risk_cp,
                        alpha: alpha_of(fit, method),
                        coefficients: args.emit_coefficients.then(|| beta_of(fit, method)),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(PathRow {
                lambda: fit.lambda,
                records,
            })
        })
        .collect::<CliResult<_>>()?;

    let output = FitOutput {
        n,
        p: data.p(),
        features: prepared.loaded.feature_names.clone(),
        response: prepared.loaded.response.clone(),
        sketch: prepared.sketch_info.clone(),
        criterion,
        sigma2,
        lambda_grid: prepared.grid.clone(),
        methods,
        selections,
        path: path_rows,
        runtime_seconds: (!args.out.no_timing).then(|| start.elapsed().as_secs_f64()),
    };
    io::emit_json(args.out.output.as_ref(), &output)
}
