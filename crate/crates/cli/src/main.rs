//! `tvm`: constants, simulation, estimation and verification runs for the
//! tempered fractional Vasicek model.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::CliError;

#[derive(Parser)]
#[command(name = "tvm", version, about = "Tempered fractional Vasicek model toolkit")]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true, env = "TVM_THREADS", value_name = "N")]
    threads: Option<usize>,

    /// Suppress the one-line summary on stdout.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print alpha^2, beta^2 by both routes, the limit covariance and limit-law parameters as JSON.
    Constants(ConstantsArgs),
    /// Simulate TFBM paths on a uniform grid and write them as CSV plus a JSON sidecar.
    Sample(FileArgs),
    /// Simulate Vasicek paths and write the least-squares drift estimates as CSV.
    Estimate(FileArgs),
    /// Run a replicated experiment and write report.json and replications.csv.
    Experiment(ExperimentArgs),
    /// Check convergence of the exact finite-horizon moments of (Z_T, U_T, V_T).
    VerifyLemmas(LemmaArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Hurst index H (dimensionless, 0 < H <= 2).
    #[arg(long = "H", value_name = "H", allow_negative_numbers = true)]
    hurst: f64,
    /// Tempering rate lambda (1 / time unit, > 0).
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Mean-reversion rate b (1 / time unit, > 0).
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Drift level a (state units / time unit).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    /// Noise scale sigma (state units, > 0).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    sigma: f64,
    /// Initial value y0 (state units).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    y0: f64,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FileArgs {
    /// JSON configuration file (schema in docs/formats.md).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Override the seed from the configuration (64-bit unsigned).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration (schema in docs/formats.md).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Override master_seed from the configuration (64-bit unsigned).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; receives report.json and replications.csv.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LemmaArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let summary = match cli.command {
        Command::Constants(a) => commands::constants(&a)?,
        Command::Sample(a) => commands::sample(&a)?,
        Command::Estimate(a) => commands::estimate(&a)?,
        Command::Experiment(a) => commands::experiment(&a)?,
        Command::VerifyLemmas(a) => commands::verify_lemmas(&a)?,
    };
    if let Some(line) = summary {
        if !cli.quiet {
            println!("{line}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
