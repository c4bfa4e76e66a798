//! `supou`: correlation functions, cumulant tables, scaling fits and Monte
//! Carlo checks for supOU processes.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::output::Output;

#[derive(Debug)]
pub enum CliError {
    /// Invalid input. Exit code 2.
    Config(String),
    /// A computation or I/O step failed. Exit code 1.
    Failure(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Failure(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<supou::Error> for CliError {
    fn from(e: supou::Error) -> Self {
        if let supou::Error::Config(msg) = e {
            CliError::Config(msg)
        } else if e.is_configuration() {
            CliError::Config(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("I/O error: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "supou",
    version,
    about = "Cumulant growth and intermittency of integrated and partial-sum supOU processes",
    after_help = "Without --config every setting takes its default. `supou print-config` prints \
                  the full effective configuration, defaults included, and its output is a valid \
                  config file.\n\nExit codes: 0 success, 1 computation failure or failed check, \
                  2 configuration error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file, TOML or JSON (by extension).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` in the config. Without one, the
    /// main table is printed to standard output.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Base random seed; overrides `seed` in the config (default 1).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads (default: one per core).
    #[arg(long, global = true, value_name = "N", env = "SUPOU_THREADS")]
    threads: Option<usize>,

    /// Format of tables and reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation function r(τ) by quadrature, next to its closed form.
    Correlation,
    /// Cumulants of the aggregate on a grid of orders and times.
    Cumulants,
    /// Scaling fits of cumulants and moments, and the intermittency verdict.
    Scaling,
    /// Monte Carlo ensemble with empirical cumulants and autocorrelations.
    Simulate,
    /// Runs the acceptance checks and reports each with its tolerance.
    Verify,
    /// Prints the effective configuration.
    PrintConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    let output = Output::new(cli.format, cfg.out.clone())?;
    match cli.command {
        Command::Correlation => commands::correlation(&cfg, &output),
        Command::Cumulants => commands::cumulants(&cfg, &output),
        Command::Scaling => commands::scaling(&cfg, &output),
        Command::Simulate => commands::simulate(&cfg, &output),
        Command::Verify => verify::run(&cfg, &output),
        Command::PrintConfig => commands::print_config(&cfg, cli.format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("supou: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Failure(_) => ExitCode::from(1),
            }
        }
    }
}
