//! Config-driven experiment runner for `neuromf`.
//!
//! Each run reads one JSON config whose `"command"` field selects
//! `simulate`, `invariant`, `solve-limit`, `chaos` or `equilibrium`, and writes
//! `report.json` plus command-specific CSV files into the output directory.
//! `report.json` is a pure function of the config and seed; wall-clock time
//! goes to `timing.json`.
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_CHECK_FAILED`], [`EXIT_CONFIG`], [`EXIT_BUDGET`].

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

pub use config::ExperimentConfig;
pub use error::{CliError, EXIT_BUDGET, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK};
pub use report::{Check, ExperimentReport, Outcome};

/// Command-line flags. The command itself is named inside the config.
#[derive(Debug, Clone, Parser)]
#[command(name = "neuromf", version, about = "Mean-field neuron model experiments")]
pub struct Cli {
    /// JSON config with a top-level "command" field.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores. Outputs do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Runs one experiment on a dedicated pool of `threads` workers.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let echo = serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?;
    pool.install(|| match config {
        ExperimentConfig::Simulate(c) => commands::simulate::cmd_simulate(c, echo),
        ExperimentConfig::Invariant(c) => commands::invariant::cmd_invariant(c, echo),
        ExperimentConfig::SolveLimit(c) => commands::solve_limit::cmd_solve_limit(c, echo),
        ExperimentConfig::Chaos(c) => commands::chaos::cmd_chaos(c, echo),
        ExperimentConfig::Equilibrium(c) => commands::equilibrium::cmd_equilibrium(c, echo),
    })
}

/// Full CLI flow; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let started = Instant::now();
    let result = ExperimentConfig::from_path(&cli.config).and_then(|mut config| {
        if let Some(seed) = cli.seed {
            config.override_seed(seed);
        }
        let outcome = run_experiment(&config, cli.threads)?;
        outcome.write_to(&cli.out)?;
        Ok((config, outcome))
    });
    match result {
        Ok((config, outcome)) => {
            let seconds = started.elapsed().as_secs_f64();
            let timing = serde_json::json!({"command": config.name(), "wall_clock_seconds": seconds, "threads": cli.threads});
            let path = cli.out.join("timing.json");
            if let Err(e) = std::fs::write(&path, format!("{timing:#}\n")) {
                eprintln!("i/o error on {}: {e}", path.display());
                return EXIT_CONFIG;
            }
            for c in outcome.report.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} = {:e} (limit {:?} {:e})", c.name, c.value, c.bound, c.limit);
            }
            eprintln!("{} finished in {seconds:.3} s: {}", config.name(), if outcome.report.passed { "pass" } else { "fail" });
            if outcome.report.passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
