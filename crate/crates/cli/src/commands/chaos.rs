use neuromf::io::{fmt_f64, CsvBuilder};
use neuromf::limit::{simulate_coupled, solve_marginals, CoupledOptions, CoupledStats};
use neuromf::metrics::{fit_rate, RateFit};
use neuromf::model::SystemConfig;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{check_times, ChaosConfig};
use crate::error::CliError;
use crate::report::{Check, ExperimentReport, Outcome};

/// Coupling statistics of one particle count, averaged over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosRow {
    pub n: usize,
    pub times: Vec<f64>,
    /// Replicate means per snapshot: `|X - Y|`, `|H(X) - H(Y)|`, `W1`.
    pub means: Vec<[f64; 3]>,
    /// Standard errors matching `means`.
    pub std_errors: Vec<[f64; 3]>,
    pub sup: [f64; 3],
    pub x_spikes: u64,
    pub proposals: u64,
}

/// Names of the three statistics, in storage order.
pub const STATISTICS: [&str; 3] = ["abs_diff", "h_diff", "w1_to_limit"];

fn aggregate(n: usize, times: &[f64], runs: &[CoupledStats]) -> ChaosRow {
    let reps = runs.len() as f64;
    let mut means = vec![[0.0; 3]; times.len()];
    let mut std_errors = vec![[0.0; 3]; times.len()];
    for k in 0..times.len() {
        let value = |r: &CoupledStats, j: usize| {
            let s = &r.snapshots[k];
            [s.mean_abs_diff, s.mean_h_diff, s.w1_to_limit][j]
        };
        for j in 0..3 {
            let mean = runs.iter().map(|r| value(r, j)).sum::<f64>() / reps;
            let var = if runs.len() > 1 {
                runs.iter().map(|r| (value(r, j) - mean).powi(2)).sum::<f64>() / (reps - 1.0)
            } else {
                0.0
            };
            means[k][j] = mean;
            std_errors[k][j] = (var / reps).sqrt();
        }
    }
    let mut sup = [0.0f64; 3];
    for m in &means {
        for j in 0..3 {
            sup[j] = sup[j].max(m[j]);
        }
    }
    ChaosRow {
        n,
        times: times.to_vec(),
        means,
        std_errors,
        sup,
        x_spikes: runs.iter().map(|r| r.x_spikes).sum(),
        proposals: runs.iter().map(|r| r.proposals).sum(),
    }
}

fn default_times(horizon: f64) -> Vec<f64> {
    (1..=8).map(|k| horizon * k as f64 / 8.0).collect()
}

fn fit_json(fit: &RateFit<f64>) -> Value {
    json!({"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared})
}

/// Propagation-of-chaos scaling: coupled particle/limit runs over a grid of
/// particle counts and log-log fits of the sup-in-time statistics.
pub fn cmd_chaos(cfg: &ChaosConfig, echo: Value) -> Result<Outcome, CliError> {
    if cfg.n_grid.len() < 3 {
        return Err(CliError::config("n_grid needs at least 3 particle counts for a fit"));
    }
    if cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) || cfg.n_grid[0] == 0 {
        return Err(CliError::config("n_grid must be positive and strictly increasing"));
    }
    if cfg.replicates == 0 {
        return Err(CliError::config("replicates must be >= 1"));
    }
    let (lo, hi) = cfg.slope_band;
    if !(lo < hi) {
        return Err(CliError::config("slope_band must satisfy lo < hi"));
    }
    let base = cfg.system.build()?;
    let times = cfg.snapshot_times.clone().unwrap_or_else(|| default_times(base.horizon));
    check_times(&times, base.horizon, "snapshot_times")?;
    if times.is_empty() {
        return Err(CliError::config("snapshot_times must not be empty"));
    }
    // the limit law does not depend on N
    let sol = solve_marginals(&base, base.tolerances.dt, &times)?;

    let jobs: Vec<(usize, u64)> =
        cfg.n_grid.iter().flat_map(|n| (0..cfg.replicates).map(move |r| (*n, r))).collect();
    let runs: Vec<CoupledStats> = jobs
        .into_par_iter()
        .map(|(n, r)| {
            let system = SystemConfig { n, ..base.clone() };
            let mut opts = CoupledOptions::new(r, times.clone());
            opts.windows = cfg.windows;
            simulate_coupled(&system, &sol, &opts)
        })
        .collect::<Result<_, neuromf::Error>>()?;
    let reps = cfg.replicates as usize;
    let rows: Vec<ChaosRow> =
        cfg.n_grid.iter().enumerate().map(|(k, n)| aggregate(*n, &times, &runs[k * reps..(k + 1) * reps])).collect();

    let mut fits = Vec::new();
    for j in 0..3 {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.sup[j])).collect();
        fits.push(fit_rate(&pairs)?);
    }
    let mut checks = Vec::new();
    for (j, fit) in fits.iter().enumerate() {
        checks.push(Check::at_least(format!("slope_{}_min", STATISTICS[j]), fit.slope, lo));
        checks.push(Check::at_most(format!("slope_{}_max", STATISTICS[j]), fit.slope, hi));
        checks.push(Check::at_least(format!("r_squared_{}", STATISTICS[j]), fit.r_squared, cfg.min_r_squared));
    }

    let per_n: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "sup_abs_diff": r.sup[0],
                "sup_h_diff": r.sup[1],
                "sup_w1_to_limit": r.sup[2],
                "x_spikes": r.x_spikes,
                "proposals": r.proposals,
            })
        })
        .collect();
    let fit_map: serde_json::Map<String, Value> =
        STATISTICS.iter().zip(&fits).map(|(name, f)| (name.to_string(), fit_json(f))).collect();
    let metrics = json!({
        "replicates": cfg.replicates,
        "snapshot_times": times,
        "limit_max_mass_drift": sol.max_mass_drift(),
        "per_n": per_n,
        "fits": fit_map,
    });

    let mut sup_csv = CsvBuilder::new(&["n", "sup_abs_diff", "sup_h_diff", "sup_w1_to_limit"]);
    let mut snap_csv =
        CsvBuilder::new(&["n", "time", "abs_diff", "abs_diff_se", "h_diff", "h_diff_se", "w1_to_limit", "w1_to_limit_se"]);
    for r in &rows {
        sup_csv.row([r.n.to_string(), fmt_f64(r.sup[0]), fmt_f64(r.sup[1]), fmt_f64(r.sup[2])]);
        for (k, t) in r.times.iter().enumerate() {
            let mut row = vec![r.n.to_string(), fmt_f64(*t)];
            for j in 0..3 {
                row.push(fmt_f64(r.means[k][j]));
                row.push(fmt_f64(r.std_errors[k][j]));
            }
            snap_csv.row(row);
        }
    }
    let files = vec![
        ("chaos_sup.csv".to_string(), sup_csv.finish()),
        ("chaos_snapshots.csv".to_string(), snap_csv.finish()),
        ("marginals.csv".to_string(), sol.to_csv()),
    ];
    let report = ExperimentReport::new("chaos", base.seed, echo, metrics, checks);
    Ok(Outcome { report, files })
}
