//! Command-line front end for compressed and penalized linear regression.
//!
//! Subcommands: `fit` (estimate on CSV data), `sketch` (compress a dataset),
//! `tune` (score a λ grid), `simulate` (replication harness), and `theory`
//! (closed-form MSE oracle). Exit codes: 0 success, 2 usage or input error,
//! 3 numerical failure.

mod error;
mod fit;
mod io;
mod simulate;
mod sketch_cmd;
mod theory_cmd;
mod tune;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "sketchridge",
    version,
    about = "Compressed (sketched) and penalized linear regression",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit compressed and penalized estimators to CSV data
    Fit(fit::FitArgs),
    /// Compress a CSV dataset with a sparse sketch
    Sketch(sketch_cmd::SketchArgs),
    /// Score a λ grid per method and select by GCV or Cp
    Tune(tune::TuneArgs),
    /// Run the simulation harness from a JSON config
    Simulate(simulate::SimulateArgs),
    /// Evaluate the closed-form MSE oracle on the orthogonal design
    Theory(theory_cmd::TheoryArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Sketch(args) => sketch_cmd::run(args),
        Command::Tune(args) => tune::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Theory(args) => theory_cmd::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
