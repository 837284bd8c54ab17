//! `sketch` subcommand: compress a CSV dataset with a sparse sketch and
//! write the compressed rows plus a sidecar JSON spec for reproducibility.

use std::path::PathBuf;

use clap::Args;
use sketchridge_core::sketch::{apply_sketch, generate_sketch, SketchSpec};

use crate::error::{CliError, CliResult};
use crate::io;

/// `sketchridge sketch` arguments.
#[derive(Args, Debug)]
pub struct SketchArgs {
    /// Input CSV to compress
    #[arg(long)]
    pub input: PathBuf,
    /// Sketch rows q
    #[arg(long)]
    pub q: usize,
    /// Sparsity parameter s: entries are nonzero with probability 1/s
    #[arg(long, default_value_t = 3.0)]
    pub s: f64,
    /// Sketch seed (falls back to SKETCHRIDGE_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path for the compressed rows
    #[arg(long)]
    pub output: PathBuf,
    /// Cap the worker-thread count
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Runs `sketchridge sketch`.
pub fn run(args: &SketchArgs) -> CliResult<()> {
    io::configure_threads(args.threads)?;
    let matrix = io::read_matrix_csv(&args.input)?;
    let n = matrix.data.nrows();
    let seed = io::resolve_seed(args.seed)?;
    let spec = SketchSpec::new(n, args.q, args.s, seed)?;
    let sketch = generate_sketch(&spec)?;
    let compressed = apply_sketch(&sketch, &matrix.data)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&matrix.names)?;
    for i in 0..compressed.nrows() {
        let row: Vec<String> = (0..compressed.ncols())
            .map(|j| format!("{}", compressed[(i, j)]))
            .collect();
        writer.write_record(&row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Input(format!("could not flush CSV output: {e}")))?;
    io::write_atomic(&args.output, &bytes)?;
    eprintln!("wrote {}", args.output.display());

    let spec_path = args.output.with_extension("spec.json");
    let mut spec_json = serde_json::to_vec_pretty(&spec)?;
    spec_json.push(b'\n');
    io::write_atomic(&spec_path, &spec_json)?;
    eprintln!("wrote {}", spec_path.display());
    Ok(())
}
