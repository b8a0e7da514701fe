use neuromf::invariant::{invariant_density, solve_a_star};
use neuromf::limit::{last_jump_expectation, last_jump_normalization, simulate_nonlinear_path, solve_marginals, solve_marginals_with, MarginalSolution,
    SolverOptions};
use neuromf::model::{InitialLaw, RateFunction, SystemConfig};
use neuromf::rng::StreamKey;

fn system(lambda: f64, rate: RateFunction, initial: InitialLaw, horizon: f64) -> SystemConfig {
    SystemConfig::new(1, lambda, rate, initial, horizon, 3).unwrap()
}

fn grid(step: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / step).round() as usize;
    (1..=n).map(|k| k as f64 * step).collect()
}

/// Trapezoid L1 distance on a uniform grid of `[0, right]`.
fn l1(sol: &MarginalSolution, t: f64, reference: impl Fn(f64) -> f64, right: f64) -> f64 {
    let d = sol.density(t).unwrap();
    let cells = 20_000;
    let h = right / cells as f64;
    let vals: Vec<f64> = (0..=cells).map(|k| (d.density_at(k as f64 * h).unwrap() - reference(k as f64 * h)).abs()).collect();
    h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[cells]))
}

#[test]
fn invariant_law_is_stationary_under_the_solver() {
    for lambda in [0.0, 1.0] {
        let rate = RateFunction::linear();
        let inv = solve_a_star(lambda, &rate, 1e-10).unwrap();
        let initial = inv.to_initial_law(4001).unwrap();
        let cfg = system(lambda, rate, initial, 5.0);
        let times = grid(0.5, 5.0);
        let sol = solve_marginals(&cfg, 0.01, &times).unwrap();
        let right = inv.numerical_support();
        for t in &times {
            let dist = l1(&sol, *t, |x| invariant_density(&inv, x), right);
            assert!(dist < 10.0 * cfg.tolerances.mass_abs, "lambda {lambda} t {t}: L1 {dist}");
        }
    }
}

#[test]
fn zero_atom_is_a_fixed_point() {
    let cfg = system(0.7, RateFunction::quadratic(), InitialLaw::point_mass(0.0).unwrap(), 2.0);
    let sol = solve_marginals(&cfg, 0.01, &[1.0, 2.0]).unwrap();
    assert!(sol.a.iter().chain(&sol.p).chain(&sol.m).all(|v| *v == 0.0));
    for d in &sol.densities {
        assert_eq!(d.atom_part.len(), 1);
        assert_eq!(d.atom_part[0].position, 0.0);
        assert!((d.atom_part[0].mass - 1.0).abs() < 1e-12);
    }
}

#[test]
fn identities_hold_at_every_snapshot() {
    let cases = [
        (0.0, RateFunction::linear(), InitialLaw::exponential(1.0).unwrap(), 3.0),
        (1.0, RateFunction::quadratic(), InitialLaw::exponential(1.0).unwrap(), 2.0),
        (0.5, RateFunction::quadratic(), InitialLaw::point_mass(1.0).unwrap(), 2.0),
        (2.0, RateFunction::polynomial(vec![0.0, 0.5, 0.5]).unwrap(), InitialLaw::exponential(2.0).unwrap(), 2.0),
    ];
    for (lambda, rate, initial, horizon) in cases {
        let cfg = system(lambda, rate.clone(), initial.clone(), horizon);
        let times = grid(0.25, horizon);
        let sol = solve_marginals(&cfg, 1e-3 * horizon, &times).unwrap();
        for d in &sol.densities {
            assert!((d.mass - 1.0).abs() <= 1e-4, "mass {} at {}", d.mass, d.time);
            assert!(d.a > 0.0 && d.p > 0.0, "positivity at {}", d.time);
            let target = d.p / d.a;
            let g0 = d.density_at(0.0).unwrap();
            assert!((g0 - target).abs() <= 1e-3 * target, "boundary {g0} vs {target}");
            let gap = last_jump_normalization(&sol, &initial, &rate, d.time, 1e-10).unwrap();
            assert!(gap.abs() <= 1e-4, "last-jump gap {gap} at {}", d.time);
        }
        assert!(sol.max_identity_gap() <= 1e-9);
    }
}

#[test]
fn moment_bound_holds() {
    // int_0^t E[Y f(Y)] ds <= 2 E[Y_0] + 2 f(2) t
    let rate = RateFunction::quadratic();
    let cfg = system(1.0, rate.clone(), InitialLaw::exponential(1.0).unwrap(), 3.0);
    let times = grid(0.05, 3.0);
    let sol = solve_marginals(&cfg, 3e-3, &times).unwrap();
    let mut integral = 0.0;
    // E[Y_0 f(Y_0)] = E[Y^3] = 6 for Exp(1)
    let mut prev = (0.0, 6.0);
    for d in &sol.densities {
        let v = d.expect(|y| y * rate.eval(y));
        integral += 0.5 * (d.time - prev.0) * (v + prev.1);
        prev = (d.time, v);
        assert!(integral <= 2.0 + 2.0 * rate.eval(2.0) * d.time, "t {}: {integral}", d.time);
    }
}

/// `|a_T - (lambda m_T + p_T)|` where the moments come from a reference run
/// on a grid 80 times finer than the coarsest step. Step halving is
/// disabled (loose `mass_abs`) so that every run takes uniform steps.
fn self_consistency_errors(lambda: f64, rate: RateFunction, dts: &[f64]) -> Vec<f64> {
    let cfg = system(lambda, rate, InitialLaw::exponential(1.0).unwrap(), 1.0);
    let mut opts = SolverOptions::from_config(&cfg);
    opts.mass_abs = 0.1;
    opts.dt = dts[0] / 80.0;
    let fine = solve_marginals_with(&cfg, &opts, &[1.0]).unwrap();
    let d = fine.density(1.0).unwrap();
    let target = lambda * d.m + d.p;
    dts.iter()
        .map(|dt| {
            opts.dt = *dt;
            let coarse = solve_marginals_with(&cfg, &opts, &[1.0]).unwrap();
            (coarse.a.last().unwrap() - target).abs()
        })
        .collect()
}

#[test]
fn halving_dt_shrinks_the_self_consistency_error() {
    let dts = [0.04, 0.02, 0.01];
    for (lambda, rate) in [(0.0, RateFunction::quadratic()), (1.0, RateFunction::quadratic()), (1.0, RateFunction::linear())] {
        let errs = self_consistency_errors(lambda, rate, &dts);
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 1.8, "lambda {lambda}: {errs:?}");
        }
    }
}

#[test]
fn last_jump_moments_match_the_node_cloud() {
    let rate = RateFunction::quadratic();
    let initial = InitialLaw::exponential(1.0).unwrap();
    let cfg = system(1.0, rate.clone(), initial.clone(), 1.0);
    let sol = solve_marginals(&cfg, 1e-3, &[0.5, 1.0]).unwrap();
    for d in &sol.densities {
        let m = last_jump_expectation(&sol, &initial, &rate, d.time, |y| y, 1e-11).unwrap();
        let p = last_jump_expectation(&sol, &initial, &rate, d.time, |y| rate.eval(y), 1e-11).unwrap();
        assert!((m - d.m).abs() <= 1e-4 && (p - d.p).abs() <= 1e-4, "t {}: {m} {p} vs {} {}", d.time, d.m, d.p);
    }
}

#[test]
fn nonlinear_paths_reproduce_the_marginal_mean() {
    let rate = RateFunction::quadratic();
    let cfg = system(1.0, rate.clone(), InitialLaw::exponential(1.0).unwrap(), 1.0);
    let sol = solve_marginals(&cfg, 1e-3, &[1.0]).unwrap();
    let flow = sol.flow().unwrap();
    let reps = 20_000u64;
    let (mut s, mut s2) = (0.0, 0.0);
    for r in 0..reps {
        let mut rng = StreamKey::new(9, "paths").replicate(r).rng();
        let y0: f64 = rand::Rng::sample(&mut rng, &cfg.initial);
        let path = simulate_nonlinear_path(&flow, &rate, y0, 1.0, &mut rng).unwrap();
        let y = path.value_at(&flow, 1.0);
        s += y;
        s2 += y * y;
    }
    let mean = s / reps as f64;
    let se = ((s2 / reps as f64 - mean * mean) / reps as f64).sqrt();
    let m = sol.density(1.0).unwrap().m;
    assert!((mean - m).abs() <= 4.0 * se, "paths {mean} +- {se} vs marginal {m}");
}
