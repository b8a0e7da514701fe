use neuromf::invariant::{invariant_density, solve_a_star};
use neuromf::io::{fmt_f64, CsvBuilder};
use neuromf::limit::{solve_marginals, MarginalSolution};
use neuromf::model::{RateKind, SystemConfig};
use neuromf::particle::{simulate_with, SimulationOptions};
use serde_json::{json, Value};

use super::l1_to_reference;
use crate::config::{EquilibriumConfig, ParticleCheck};
use crate::error::CliError;
use crate::report::{Check, ExperimentReport, Outcome};

fn time_grid(step: f64, horizon: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..).map(|k| k as f64 * step).take_while(|t| *t < horizon * (1.0 - 1e-12)).collect();
    grid.push(horizon);
    grid
}

fn grid_index(grid: &[f64], t: f64) -> Option<usize> {
    grid.iter().position(|s| (s - t).abs() <= 1e-9 * (1.0 + t))
}

/// Long-time behaviour of the limit law: TV convergence to the invariant
/// density for `lambda = 0`, non-extinction of the mean for `lambda > 0`.
pub fn cmd_equilibrium(cfg: &EquilibriumConfig, echo: Value) -> Result<Outcome, CliError> {
    let system = cfg.system.build()?;
    if !(cfg.grid_step > 0.0) || cfg.grid_step >= system.horizon {
        return Err(CliError::config("grid_step must lie in (0, horizon)"));
    }
    if !(cfg.check_from >= 0.0) || cfg.check_from >= system.horizon {
        return Err(CliError::config("check_from must lie in [0, horizon)"));
    }
    if !(cfg.a_floor > 0.0) || !(cfg.m_floor > 0.0) {
        return Err(CliError::config("a_floor and m_floor must be positive"));
    }
    let grid = time_grid(cfg.grid_step, system.horizon);
    let sol = solve_marginals(&system, system.tolerances.dt, &grid)?;
    let (mut metrics, mut checks, mut files) =
        if system.lambda == 0.0 { tv_path(cfg, &system, &sol, &grid)? } else { floor_path(cfg, &sol) };
    if let Some(pc) = &cfg.particle_check {
        let (m, c) = particle_path(pc, cfg, &system, &grid)?;
        metrics["particle"] = m;
        checks.extend(c);
    }
    files.push(("marginals.csv".to_string(), sol.to_csv()));
    let report = ExperimentReport::new("equilibrium", system.seed, echo, metrics, checks);
    Ok(Outcome { report, files })
}

type PathResult = (Value, Vec<Check>, Vec<(String, String)>);

fn tv_path(cfg: &EquilibriumConfig, system: &SystemConfig, sol: &MarginalSolution, grid: &[f64]) -> Result<PathResult, CliError> {
    let inv = solve_a_star(0.0, &system.rate, system.tolerances.root_abs)?;
    let right = inv.numerical_support();
    let tv: Vec<f64> =
        sol.densities.iter().map(|d| 0.5 * l1_to_reference(d, |x| invariant_density(&inv, x), right)).collect();
    let slack = 10.0 * system.tolerances.mass_abs;
    let start = grid.iter().position(|t| *t >= cfg.check_from - 1e-12).unwrap_or(grid.len() - 1);
    let worst_increase = tv[start..].windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);

    let mut checks = vec![];
    if grid.len() - start >= 2 {
        checks.push(Check::at_most("tv_max_increase", worst_increase, slack));
    }
    let last = *tv.last().unwrap();
    if let Some(k5) = grid_index(grid, 5.0).filter(|_| system.horizon > 5.0) {
        checks.push(Check::at_most("tv_final_minus_tv5", last - tv[k5], 0.0));
    }
    if let Some(max) = cfg.final_tv_max {
        checks.push(Check::at_most("tv_final", last, max));
    }
    let xi = cfg.decay_xi.or(match system.rate.kind() {
        RateKind::Power { xi, .. } => Some(*xi),
        _ => None,
    });
    let mut worst_ratio = Value::Null;
    if let Some(xi) = xi {
        let t0 = grid[start];
        let tv0 = tv[start];
        let ratio = grid[start..]
            .iter()
            .zip(&tv[start..])
            .map(|(t, v)| v / (tv0 * ((1.0 + t0) / (1.0 + t)).powf(1.0 / xi) * cfg.decay_factor))
            .fold(0.0, f64::max);
        checks.push(Check::at_most("tv_decay_ratio", ratio, 1.0));
        worst_ratio = Value::from(ratio);
    }

    let mut csv = CsvBuilder::new(&["time", "tv"]);
    for (t, v) in grid.iter().zip(&tv) {
        csv.row([fmt_f64(*t), fmt_f64(*v)]);
    }
    let metrics = json!({
        "path": "tv",
        "invariant_p": inv.p,
        "initial_density_at_zero": system.initial.density(0.0),
        "times": grid,
        "tv": tv,
        "tv_max_increase": worst_increase,
        "decay_xi": xi,
        "tv_decay_ratio": worst_ratio,
    });
    Ok((metrics, checks, vec![("tv.csv".to_string(), csv.finish())]))
}

fn floor_path(cfg: &EquilibriumConfig, sol: &MarginalSolution) -> PathResult {
    let window: Vec<usize> = (0..sol.times.len()).filter(|k| sol.times[*k] >= cfg.check_from - 1e-12).collect();
    let inf_a = window.iter().map(|k| sol.a[*k]).fold(f64::INFINITY, f64::min);
    let inf_m = window.iter().map(|k| sol.m[*k]).fold(f64::INFINITY, f64::min);
    let metrics = json!({
        "path": "non_extinction",
        "inf_a": inf_a,
        "inf_m": inf_m,
        "final_m": sol.m.last(),
        "final_p": sol.p.last(),
    });
    let checks = vec![Check::at_least("solver_inf_a", inf_a, cfg.a_floor), Check::at_least("solver_inf_m", inf_m, cfg.m_floor)];
    (metrics, checks, vec![])
}

/// Lower band `mean - sigmas * sd / sqrt(N)` of the empirical mean on the check window.
fn particle_path(
    pc: &ParticleCheck,
    cfg: &EquilibriumConfig,
    system: &SystemConfig,
    grid: &[f64],
) -> Result<(Value, Vec<Check>), CliError> {
    if pc.n == 0 || !(pc.sigmas >= 0.0) {
        return Err(CliError::config("particle_check needs n >= 1 and sigmas >= 0"));
    }
    let times: Vec<f64> = grid.iter().copied().filter(|t| *t >= cfg.check_from - 1e-12).collect();
    let particles = SystemConfig { n: pc.n, ..system.clone() };
    let opts = SimulationOptions { record_events: false, ..SimulationOptions::replicate(0) };
    let out = simulate_with(&particles, &times, &opts)?;
    let n = pc.n as f64;
    let mut lower = Vec::with_capacity(times.len());
    let mut means = Vec::with_capacity(times.len());
    for s in &out.snapshots {
        let var = if pc.n > 1 {
            s.values.iter().map(|x| (x - s.mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        means.push(s.mean);
        lower.push(s.mean - pc.sigmas * (var / n).sqrt());
    }
    let inf_lower = lower.iter().copied().fold(f64::INFINITY, f64::min);
    let metrics = json!({
        "n": pc.n,
        "spikes": out.log.spikes,
        "times": times,
        "mean": means,
        "lower_band": lower,
        "inf_lower_band": inf_lower,
    });
    Ok((metrics, vec![Check::at_least("particle_inf_m_lower_band", inf_lower, cfg.m_floor)]))
}
