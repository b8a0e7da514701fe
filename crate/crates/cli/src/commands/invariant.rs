use neuromf::invariant::solve_a_star_with;
use neuromf::io::{fmt_f64, CsvBuilder};
use neuromf::model::RateFunction;
use serde_json::{json, Value};

use crate::config::InvariantConfig;
use crate::error::CliError;
use crate::report::{finite_or_null, Check, ExperimentReport, Outcome};

/// Invariant density, its scalar root and quadrature residuals.
pub fn cmd_invariant(cfg: &InvariantConfig, echo: Value) -> Result<Outcome, CliError> {
    if cfg.density_points < 2 {
        return Err(CliError::config("density_points must be >= 2"));
    }
    let rate = RateFunction::try_from(cfg.rate.clone())?;
    let inv = solve_a_star_with(cfg.lambda, &rate, cfg.root_abs, cfg.density_points)?;
    let r = inv.residuals;
    let metrics = json!({
        "lambda": inv.lambda,
        "a_star": inv.a_star,
        "p": inv.p,
        "m": inv.m,
        "support_right": finite_or_null(inv.support_right),
        "numerical_support": inv.numerical_support(),
        "residuals": {
            "normalization": r.normalization,
            "rate_mean": r.rate_mean,
            "self_consistency": r.self_consistency,
            "fixed_point": r.fixed_point,
            "tail_bound": r.tail_bound,
        },
    });
    let checks = vec![
        Check::at_most("normalization_residual", r.normalization.abs(), cfg.root_abs),
        Check::at_most("rate_mean_residual", r.rate_mean.abs(), 10.0 * cfg.root_abs),
        Check::at_most("self_consistency_residual", r.self_consistency.abs(), 10.0 * cfg.root_abs),
    ];
    let mut csv = CsvBuilder::new(&["x", "density"]);
    for (x, g) in &inv.density {
        csv.row([fmt_f64(*x), fmt_f64(*g)]);
    }
    let report = ExperimentReport::new("invariant", 0, echo, metrics, checks);
    Ok(Outcome { report, files: vec![("invariant_density.csv".to_string(), csv.finish())] })
}
