//! `tune` subcommand: score the λ grid for each penalized method and
//! report the full criterion tables alongside the selected points.

use std::time::Instant;

use clap::Args;
use serde::Serialize;
use sketchridge_core::estimators::{fit_path, Method, PathOptions};
use sketchridge_core::tuning::{record_for, select_lambda, Criterion, TuningRecord};

use crate::error::{CliError, CliResult};
use crate::fit::{self, CriterionArg, DataArgs, GridFlags, OutputFlags, SketchFlags, SketchInfo};
use crate::io;

/// `sketchridge tune` arguments.
#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sketch: SketchFlags,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub out: OutputFlags,
    /// Comma-separated penalized methods (default: ridge,fc,pc,combo_linear,combo_convex)
    #[arg(long)]
    pub methods: Option<String>,
    /// Penalty-selection criterion
    #[arg(long, value_enum, default_value_t)]
    pub criterion: CriterionArg,
    /// Noise-variance estimate for the Cp criterion
    #[arg(long)]
    pub sigma2: Option<f64>,
}

/// One method's full criterion table.
#[derive(Debug, Serialize)]
struct MethodTable {
    method: Method,
    records: Vec<TuningRecord>,
    selected_lambda: f64,
    selected: TuningRecord,
}

/// The `tune` report.
#[derive(Debug, Serialize)]
struct TuneOutput {
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
    tables: Vec<MethodTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_seconds: Option<f64>,
}

/// Runs `sketchridge tune`.
pub fn run(args: &TuneArgs) -> CliResult<()> {
    let start = Instant::now();
    io::configure_threads(args.out.threads)?;
    let sigma2 = fit::check_criterion(args.criterion, args.sigma2)?;
    let criterion = args.criterion.to_core();

    let methods: Vec<Method> = match args.methods.as_deref() {
        None => Method::ALL
            .into_iter()
            .filter(|&m| m != Method::Ols)
            .collect(),
        some => {
            let parsed = io::parse_methods(some)?;
            if parsed.contains(&Method::Ols) {
                return Err(CliError::Usage(
                    "ols has no penalty to tune; drop it from --methods".into(),
                ));
            }
            parsed
        }
    };

    let prepared = fit::prepare(&args.data, &args.sketch, &args.grid)?;
    let data = &prepared.loaded.data;
    let n = data.n();
    let path = fit_path(
        &prepared.cd,
        data,
        &prepared.grid,
        &PathOptions {
            with_ridge: methods.contains(&Method::Ridge),
        },
    )?;

    let tables = methods
        .iter()
        .map(|&method| {
            let records: Vec<TuningRecord> = path
                .iter()
                .map(|f| record_for(f, method, n, sigma2))
                .collect::<Result<_, _>>()?;
            let (selected_lambda, selected) = select_lambda(&records, criterion)?;
            Ok(MethodTable {
                method,
                records,
                selected_lambda,
                selected,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let output = TuneOutput {
        n,
        p: data.p(),
        features: prepared.loaded.feature_names.clone(),
        response: prepared.loaded.response.clone(),
        sketch: prepared.sketch_info.clone(),
        criterion,
        sigma2,
        lambda_grid: prepared.grid.clone(),
        methods,
        tables,
        runtime_seconds: (!args.out.no_timing).then(|| start.elapsed().as_secs_f64()),
    };
    io::emit_json(args.out.output.as_ref(), &output)
}
