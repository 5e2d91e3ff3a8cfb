mod analyze;
mod config;
mod simulate;
mod threshold;
mod validate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Loss-aware quantum non-Gaussianity thresholds and count analysis.
///
/// Every command accepts `--config run.json`; flags override its fields.
/// Exit status: 0 success, 2 analyzed but not certified (or a flagged
/// validation check), 1 error.
#[derive(Parser)]
#[command(name = "lossqng", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace a Gaussian threshold curve and write it as CSV and JSON.
    Threshold(threshold::Args),
    /// Analyze a counts file against a criterion.
    Analyze(analyze::Args),
    /// Run a seeded source simulation and write analyzer-ready counts.
    Simulate(simulate::Args),
    /// Cross-check the Gaussian formulas and the simulator.
    Validate(validate::Args),
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// Analysis finished but the state is not certified, or a check flagged.
    Negative,
    /// Finished with failures worth a non-zero exit, outputs still written.
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Threshold(a) => threshold::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Validate(a) => validate::run(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Negative) => ExitCode::from(2),
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
