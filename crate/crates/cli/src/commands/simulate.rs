use neuromf::particle::{check_apriori, simulate_with, snapshots_csv, snapshots_summary_csv, SimulationOptions};
use neuromf::particle::{BoundReport, SimulationOutput};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{check_times, SimulateConfig};
use crate::error::CliError;
use crate::report::{Check, ExperimentReport, Outcome};

/// Replicated exact simulation with a priori checks on every run.
pub fn cmd_simulate(cfg: &SimulateConfig, echo: Value) -> Result<Outcome, CliError> {
    let system = cfg.system.build()?;
    check_times(&cfg.snapshot_times, system.horizon, "snapshot_times")?;
    if cfg.replicates == 0 {
        return Err(CliError::config("replicates must be >= 1"));
    }
    let runs: Vec<(SimulationOutput, BoundReport)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut opts = SimulationOptions::replicate(r);
            if let Some(b) = cfg.event_budget {
                opts.event_budget = b;
            }
            let out = simulate_with(&system, &cfg.snapshot_times, &opts)?;
            let bounds = check_apriori(&out, &system);
            Ok((out, bounds))
        })
        .collect::<Result<_, neuromf::Error>>()?;

    let per_run: Vec<Value> = runs
        .iter()
        .enumerate()
        .map(|(r, (out, b))| {
            let violations: Vec<Value> = b
                .violations
                .iter()
                .map(|v| json!({"time": v.time, "kind": v.kind, "value": v.value, "bound": v.bound}))
                .collect();
            json!({
                "replicate": r,
                "spikes": out.log.spikes,
                "proposals": out.log.proposals,
                "acceptance_ratio": out.log.acceptance_ratio(),
                "envelope_checks": b.envelope_checks,
                "mean_checks": b.mean_checks,
                "max_mean_error": b.max_mean_error,
                "min_envelope_slack": crate::report::finite_or_null(b.min_envelope_slack),
                "terminal_mean": out.terminal.iter().sum::<f64>() / out.terminal.len() as f64,
                "violations": violations,
            })
        })
        .collect();
    let total_violations: usize = runs.iter().map(|(_, b)| b.violations.len()).sum();
    let total_spikes: u64 = runs.iter().map(|(o, _)| o.log.spikes).sum();
    let metrics = json!({"total_spikes": total_spikes, "total_violations": total_violations, "replicates": per_run});
    let checks = vec![Check::at_most("apriori_violations", total_violations as f64, 0.0)];

    let mut files = Vec::new();
    if !cfg.snapshot_times.is_empty() {
        let by_rep = || runs.iter().enumerate().map(|(r, (o, _))| (r as u64, o.snapshots.as_slice()));
        files.push(("snapshots.csv".to_string(), snapshots_csv(by_rep())));
        files.push(("snapshots_summary.csv".to_string(), snapshots_summary_csv(by_rep())));
    }
    if cfg.write_events {
        for (r, (o, _)) in runs.iter().enumerate() {
            files.push((format!("events_{r:04}.csv"), o.log.to_csv()));
        }
    }
    let report = ExperimentReport::new("simulate", system.seed, echo, metrics, checks);
    Ok(Outcome { report, files })
}
