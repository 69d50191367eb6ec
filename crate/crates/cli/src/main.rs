mod args;
mod commands;
mod error;
mod provenance;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

const WORKERS_ENV: &str = "BALLISTICS_WORKERS";

fn configure_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start {n} workers: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_workers()?;
    match &cli.command {
        Command::Extract(a) => commands::extract(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Grid(a) => commands::grid(a),
        Command::Fig4(a) => commands::fig4(a),
        Command::MakeDataset(a) => commands::make_dataset(a),
        Command::Ssim(a) => commands::ssim(a),
        Command::HistCompare(a) => commands::hist_compare(a),
        Command::Properties(a) => commands::properties(a),
    }
}

fn main() -> ExitCode {
    // clap prints usage and exits with status 2 on argument errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
