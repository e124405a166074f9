//! `rmt-jacobi`: sample, evaluate and compare eigenvalue densities of the
//! correlated Jacobi and Cauchy-Lorentz ensembles.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod svg;
mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "rmt-jacobi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw matrices, write their eigenvalues and a histogram.
    Sample(RunArgs),
    /// Evaluate the level density by the configured method(s).
    Density(RunArgs),
    /// Monte Carlo against the analytic densities, with goodness-of-fit numbers.
    Compare(RunArgs),
    /// Run the built-in invariant and oracle checks.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: verify::Level,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config, or the sidecar of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Field overrides by dotted name, e.g. `--mc.seed 7` or `--params.beta=1`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("RMT_JACOBI_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("RMT_JACOBI_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Sample(a) => commands::cmd_sample(&config::load(a.config.as_deref(), &a.overrides)?),
        Command::Density(a) => commands::cmd_density(&config::load(a.config.as_deref(), &a.overrides)?),
        Command::Compare(a) => commands::cmd_compare(&config::load(a.config.as_deref(), &a.overrides)?),
        Command::Verify { level, output } => {
            let report = verify::run(level);
            for c in &report.checks {
                eprintln!(
                    "{} {}: {} ({:.1}s)",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail,
                    c.seconds
                );
            }
            match &output {
                Some(path) => output::write_json(path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
            }
            if report.failed > 0 {
                return Err(CliError::ChecksFailed {
                    failed: report.failed,
                    total: report.checks.len(),
                });
            }
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
