use neuromf::limit::{last_jump_normalization, solve_marginals_with, MarginalSolution, SolverOptions};
use neuromf::model::SystemConfig;
use serde_json::{json, Value};

use super::l1_to_reference;
use crate::config::{check_times, SolveLimitConfig};
use crate::error::CliError;
use crate::report::{finite_or_null, Check, ExperimentReport, Outcome};

/// Identities of one stored marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotIdentities {
    pub time: f64,
    pub mass: f64,
    pub interpolant_mass: f64,
    /// `|g(t,0) - p/a| / (p/a)`; NaN when `a = 0`.
    pub boundary_gap: f64,
    /// Deviation of the last-jump decomposition from one.
    pub last_jump_gap: f64,
    /// L1 distance to the initial density, NaN for laws without one.
    pub l1_to_initial: f64,
}

/// Evaluates the solver identities at every stored snapshot.
pub fn snapshot_identities(sol: &MarginalSolution, system: &SystemConfig) -> Result<Vec<SnapshotIdentities>, CliError> {
    let initial = &system.initial;
    let has_density = initial.density(0.0).is_some();
    sol.densities
        .iter()
        .map(|d| {
            let boundary_gap = if d.a > 0.0 {
                let target = d.p / d.a;
                (d.density_at(0.0)? - target).abs() / target
            } else {
                f64::NAN
            };
            let last_jump_gap =
                last_jump_normalization(sol, initial, &system.rate, d.time, system.tolerances.quadrature_abs)?.abs();
            let l1_to_initial = if has_density {
                l1_to_reference(d, |x| initial.density(x).unwrap_or(0.0), initial.support_hint())
            } else {
                f64::NAN
            };
            Ok(SnapshotIdentities {
                time: d.time,
                mass: d.mass,
                interpolant_mass: d.interpolant_mass(),
                boundary_gap,
                last_jump_gap,
                l1_to_initial,
            })
        })
        .collect()
}

/// Characteristics solve of the limit marginals with identity checks.
pub fn cmd_solve_limit(cfg: &SolveLimitConfig, echo: Value) -> Result<Outcome, CliError> {
    let system = cfg.system.build()?;
    check_times(&cfg.snapshot_times, system.horizon, "snapshot_times")?;
    let mut opts = SolverOptions::from_config(&system);
    if let Some(c) = cfg.corrector_passes {
        opts.corrector_passes = c;
    }
    if let Some(n) = cfg.initial_nodes {
        opts.initial_nodes = n;
    }
    let sol = solve_marginals_with(&system, &opts, &cfg.snapshot_times)?;
    let ids = snapshot_identities(&sol, &system)?;
    let mass_abs = system.tolerances.mass_abs;

    let worst_mass = ids.iter().map(|s| (s.mass - 1.0).abs()).fold(0.0, f64::max);
    let worst_last_jump = ids.iter().map(|s| s.last_jump_gap).fold(0.0, f64::max);
    let snapshots: Vec<Value> = ids
        .iter()
        .zip(&sol.densities)
        .map(|(s, d)| {
            json!({
                "time": s.time,
                "a": d.a,
                "p": d.p,
                "m": d.m,
                "mass": s.mass,
                "interpolant_mass": s.interpolant_mass,
                "boundary_gap": finite_or_null(s.boundary_gap),
                "last_jump_gap": s.last_jump_gap,
                "l1_to_initial": finite_or_null(s.l1_to_initial),
            })
        })
        .collect();
    let metrics = json!({
        "steps": sol.times.len() - 1,
        "max_mass_drift": sol.max_mass_drift(),
        "max_identity_gap": sol.max_identity_gap(),
        "p_min": sol.p.iter().copied().fold(f64::INFINITY, f64::min),
        "p_max": sol.p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "snapshots": snapshots,
    });
    let checks = vec![
        Check::at_most("snapshot_mass_drift", worst_mass, mass_abs),
        Check::at_most("last_jump_normalization", worst_last_jump, mass_abs),
    ];

    let mut files = vec![("marginals.csv".to_string(), sol.to_csv())];
    for (k, d) in sol.densities.iter().enumerate() {
        files.push((format!("density_{k:03}.csv"), d.to_csv()));
    }
    let report = ExperimentReport::new("solve-limit", system.seed, echo, metrics, checks);
    Ok(Outcome { report, files })
}
