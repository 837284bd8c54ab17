//! `simulate` subcommand: run the replication harness from a JSON config
//! and write the aggregate report (JSON) plus flat per-replication rows (CSV).

use std::path::PathBuf;

use clap::Args;
use sketchridge_core::sim::{run_sim, RepOutcome, SimConfig};

use crate::error::{CliError, CliResult};
use crate::io;

/// `sketchridge simulate` arguments.
#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON simulation config
    #[arg(long, conflicts_with = "desk_scale")]
    pub config: Option<PathBuf>,
    /// Use the built-in desk-scale config instead of a file
    #[arg(long)]
    pub desk_scale: bool,
    /// Override the config's base seed (falls back to SKETCHRIDGE_SEED for --desk-scale)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON path for the aggregate report
    #[arg(long)]
    pub output: PathBuf,
    /// Output CSV path for per-replication rows (default: output with a .csv extension)
    #[arg(long)]
    pub csv_output: Option<PathBuf>,
    /// Cap the worker-thread count
    #[arg(long)]
    pub threads: Option<usize>,
    /// Omit wall-clock timing so outputs are byte-reproducible
    #[arg(long)]
    pub no_timing: bool,
}

/// Formats one f64 CSV cell; full round-trip precision.
fn cell(v: f64) -> String {
    format!("{v}")
}

fn lambda_cell(lambda: Option<f64>) -> String {
    lambda.map(cell).unwrap_or_default()
}

/// Flattens replication outcomes into `rep,q,method,lambda,metric,value` rows.
fn write_rep_csv(reps: &[RepOutcome], grid: &[f64]) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["rep", "q", "method", "lambda", "metric", "value"])?;
    for rep in reps {
        for (method, out) in &rep.per_method {
            let head = [rep.rep.to_string(), rep.q.to_string(), method.name().into()];
            let mut row = |lambda: Option<f64>, metric: &str, value: f64| {
                let lam = lambda_cell(lambda);
                let val = cell(value);
                writer.write_record([
                    head[0].as_str(),
                    head[1].as_str(),
                    head[2].as_str(),
                    lam.as_str(),
                    metric,
                    val.as_str(),
                ])
            };
            // Per-grid-point curves; OLS carries a single unindexed entry.
            let on_grid = out.est_mse_per_lambda.len() == grid.len();
            for (idx, &v) in out.est_mse_per_lambda.iter().enumerate() {
                row(on_grid.then(|| grid[idx]), "est_mse", v)?;
            }
            if let Some(test) = &out.test_mse_per_lambda {
                let on_grid = test.len() == grid.len();
                for (idx, &v) in test.iter().enumerate() {
                    row(on_grid.then(|| grid[idx]), "test_mse", v)?;
                }
            }
            row(
                out.selected_lambda,
                "est_mse_selected",
                out.est_mse_selected,
            )?;
            if let Some(v) = out.test_mse_selected {
                row(out.selected_lambda, "test_mse_selected", v)?;
            }
            if let Some(v) = out.test_mse_min {
                row(None, "test_mse_min", v)?;
            }
            if let Some(v) = out.gcv_ratio {
                row(out.selected_lambda, "gcv_ratio", v)?;
            }
            let win = if rep.winner == *method { 1.0 } else { 0.0 };
            row(None, "win", win)?;
        }
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Input(format!("could not flush CSV output: {e}")))
}

/// Runs `sketchridge simulate`.
pub fn run(args: &SimulateArgs) -> CliResult<()> {
    io::configure_threads(args.threads)?;

    let cfg = match (&args.config, args.desk_scale) {
        (Some(path), false) => {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let mut cfg: SimConfig = serde_json::from_str(&raw)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            cfg
        }
        (None, true) => SimConfig::desk_scale(io::resolve_seed(args.seed)?),
        (Some(_), true) => unreachable!("clap conflicts_with prevents this"),
        (None, false) => {
            return Err(CliError::Usage(
                "one of --config or --desk-scale is required".into(),
            ))
        }
    };

    let csv_path = args
        .csv_output
        .clone()
        .unwrap_or_else(|| args.output.with_extension("csv"));
    if csv_path == args.output {
        return Err(CliError::Usage(format!(
            "JSON and CSV outputs both resolve to {}; pass a distinct --csv-output",
            csv_path.display()
        )));
    }

    let mut sim = run_sim(&cfg)?;
    if args.no_timing {
        sim.report.runtime_seconds = None;
    }

    let csv_bytes = write_rep_csv(&sim.reps, &sim.report.lambda_grid)?;
    io::write_atomic(&csv_path, &csv_bytes)?;
    eprintln!("wrote {}", csv_path.display());
    io::emit_json(Some(&args.output), &sim.report)
}
