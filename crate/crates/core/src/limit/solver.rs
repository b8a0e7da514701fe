//! Time-stepping of the characteristics representation
//!
//! ```text
//! g(t, dy) = int_0^t p_s kappa_{s,t}(0) delta_{phi_{s,t}(0)}(dy) ds
//!          + int g0(dx) kappa_{0,t}(x) delta_{phi_{0,t}(x)}(dy)
//! ```
//!
//! All three parts (jump, initial, atoms) are clouds of Lagrangian nodes with
//! a fixed weight, a position moved by the exact flow of a piecewise-linear
//! drift, and a survival factor. Then `mass`, `p_t = int f dg(t)` and
//! `m_t = int y dg(t)` are weighted sums, and `a_t = lambda m_t + p_t`.

use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvBuilder};
use crate::model::{forced_response, CharacteristicFlow, DriftSeries, InitialLaw, RateFunction, SystemConfig};
use crate::quad::{trapezoid_weights, GaussLegendre};

use super::density::{AtomSample, InitialSample, JumpSample, TransportedDensity};

/// Panels of the Gauss rule used for exponential initial laws.
const EXP_PANELS: usize = 400;
/// Steps between compactions of dead nodes.
const COMPACT_EVERY: usize = 64;

/// Knobs of [`solve_marginals_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub dt: f64,
    pub corrector_passes: usize,
    /// Minimum number of nodes discretizing an absolutely continuous initial law.
    pub initial_nodes: usize,
    /// Nodes whose survival falls below this are dropped.
    pub prune_survival: f64,
    pub mass_abs: f64,
}

impl SolverOptions {
    pub fn from_config(config: &SystemConfig) -> Self {
        Self {
            dt: config.tolerances.dt,
            corrector_passes: 1,
            initial_nodes: 4001,
            prune_survival: 1e-40,
            mass_abs: config.tolerances.mass_abs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Meta {
    Initial { origin: f64, g0: f64 },
    Atom { origin: f64 },
    Jump { birth: f64, birth_density: f64 },
}

/// Node cloud in struct-of-arrays layout.
#[derive(Debug, Clone, Default)]
struct Cloud {
    pos: Vec<f64>,
    surv: Vec<f64>,
    weight: Vec<f64>,
    meta: Vec<Meta>,
}

impl Cloud {
    fn push(&mut self, pos: f64, weight: f64, meta: Meta) {
        self.pos.push(pos);
        self.surv.push(1.0);
        self.weight.push(weight);
        self.meta.push(meta);
    }

    /// `(mass, int f, int y)`.
    fn moments(&self, rate: &RateFunction) -> (f64, f64, f64) {
        let (mut mass, mut p, mut m) = (0.0, 0.0, 0.0);
        for k in 0..self.pos.len() {
            let w = self.weight[k] * self.surv[k];
            mass += w;
            p += w * rate.eval(self.pos[k]);
            m += w * self.pos[k];
        }
        (mass, p, m)
    }

    fn compact(&mut self, threshold: f64) {
        let keep: Vec<bool> = (0..self.pos.len())
            .map(|k| matches!(self.meta[k], Meta::Atom { .. }) || self.surv[k] >= threshold || k + 1 == self.pos.len())
            .collect();
        if keep.iter().all(|k| *k) {
            return;
        }
        let mut j = 0;
        for k in 0..keep.len() {
            if keep[k] {
                self.pos[j] = self.pos[k];
                self.surv[j] = self.surv[k];
                self.weight[j] = self.weight[k];
                self.meta[j] = self.meta[k];
                j += 1;
            }
        }
        self.pos.truncate(j);
        self.surv.truncate(j);
        self.weight.truncate(j);
        self.meta.truncate(j);
    }
}

/// Discretizes the initial law into nodes `(origin, quadrature weight, density)`; atoms carry no density.
fn initial_cloud(law: &InitialLaw, min_nodes: usize) -> Cloud {
    let mut cloud = Cloud::default();
    match law {
        InitialLaw::PointMass { x0 } => cloud.push(*x0, 1.0, Meta::Atom { origin: *x0 }),
        InitialLaw::Exponential { rate } => {
            let gl = GaussLegendre::<f64>::new(8);
            let upper = law.support_hint();
            let panels = EXP_PANELS.max(min_nodes.div_ceil(8));
            let h = upper / panels as f64;
            // the panel endpoints are included with zero weight so the interpolant spans the support
            cloud.push(0.0, 0.0, Meta::Initial { origin: 0.0, g0: *rate });
            for k in 0..panels {
                let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
                for (x, w) in gl.mapped(lo, hi) {
                    let g0 = rate * (-rate * x).exp();
                    cloud.push(x, w * g0, Meta::Initial { origin: x, g0 });
                }
            }
        }
        InitialLaw::TruncatedDensity(_) => {
            let (xs, gs) = law.density_nodes(min_nodes).expect("absolutely continuous law");
            let ws = trapezoid_weights(&xs);
            for ((x, g), w) in xs.iter().zip(&gs).zip(&ws) {
                cloud.push(*x, w * g, Meta::Initial { origin: *x, g0: *g });
            }
        }
    }
    cloud
}

/// Time-marginals of the limit process.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSolution {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub a: Vec<f64>,
    pub p: Vec<f64>,
    pub m: Vec<f64>,
    /// Quadrature mass after each step.
    pub mass: Vec<f64>,
    /// Marginals at the requested snapshot times, in order.
    pub densities: Vec<TransportedDensity>,
}

impl MarginalSolution {
    /// `a_t` as a piecewise-linear drift.
    pub fn drift(&self) -> Result<DriftSeries> {
        DriftSeries::new(self.times.clone(), self.a.clone())
    }

    /// Closed-form characteristics of the solved drift.
    pub fn flow(&self) -> Result<CharacteristicFlow> {
        Ok(CharacteristicFlow::new(self.lambda, self.drift()?))
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Stored marginal at snapshot time `t`.
    pub fn density(&self, t: f64) -> Option<&TransportedDensity> {
        let eps = 1e-12 * (1.0 + t.abs());
        self.densities.iter().find(|d| (d.time - t).abs() <= eps)
    }

    /// Density of `g(t)` at `y` for a stored snapshot time `t`.
    pub fn density_at(&self, t: f64, y: f64) -> Result<f64> {
        self.density(t)
            .ok_or_else(|| Error::InvalidArgument(format!("no stored snapshot at t = {t}")))?
            .density_at(y)
    }

    /// Largest `|mass - 1|` over all steps.
    pub fn max_mass_drift(&self) -> f64 {
        self.mass.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest `|a - lambda m - p|` over all steps.
    pub fn max_identity_gap(&self) -> f64 {
        (0..self.times.len()).map(|k| (self.a[k] - self.lambda * self.m[k] - self.p[k]).abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `time,a,p,m`.
    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::new(&["time", "a", "p", "m"]);
        for k in 0..self.times.len() {
            csv.row([fmt_f64(self.times[k]), fmt_f64(self.a[k]), fmt_f64(self.p[k]), fmt_f64(self.m[k])]);
        }
        csv.finish()
    }
}

fn time_grid(horizon: f64, dt: f64, snapshots: &[f64]) -> Vec<f64> {
    let steps = (horizon / dt).ceil() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|k| (k as f64 * dt).min(horizon)).collect();
    grid.extend(snapshots.iter().copied());
    grid.sort_by(f64::total_cmp);
    let eps = 1e-9 * dt;
    let mut out: Vec<f64> = Vec::with_capacity(grid.len());
    for t in grid {
        match out.last_mut() {
            Some(last) if (t - *last).abs() <= eps => {
                // snapshot times win over nearby grid points
                if snapshots.contains(&t) {
                    *last = t;
                }
            }
            _ => out.push(t),
        }
    }
    out
}

/// Solves the limit marginals with the time step `dt` and the tolerances of `config`.
pub fn solve_marginals(config: &SystemConfig, dt: f64, snapshot_times: &[f64]) -> Result<MarginalSolution> {
    let options = SolverOptions { dt, ..SolverOptions::from_config(config) };
    solve_marginals_with(config, &options, snapshot_times)
}

/// Solves the limit marginals with explicit solver options.
pub fn solve_marginals_with(config: &SystemConfig, options: &SolverOptions, snapshot_times: &[f64]) -> Result<MarginalSolution> {
    config.validate()?;
    let horizon = config.horizon;
    if !(options.dt > 0.0) || options.dt > horizon {
        return Err(Error::InvalidConfig(format!("solver dt must lie in (0, {horizon}], got {}", options.dt)));
    }
    if !(options.mass_abs > 0.0) {
        return Err(Error::InvalidConfig("mass_abs must be > 0".into()));
    }
    if snapshot_times.iter().any(|t| !(*t >= 0.0 && *t <= horizon)) || snapshot_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(format!("snapshot times must be sorted in [0, {horizon}]")));
    }
    let lambda = config.lambda;
    let rate = &config.rate;
    let grid = time_grid(horizon, options.dt, snapshot_times);

    let mut cloud = initial_cloud(&config.initial, options.initial_nodes);
    let (mass0, p0, m0) = cloud.moments(rate);
    check_finite(0.0, &[mass0, p0, m0])?;
    let a0 = lambda * m0 + p0;
    let birth_density = |p: f64, a: f64| if a > 0.0 { p / a } else { 0.0 };
    cloud.push(0.0, 0.0, Meta::Jump { birth: 0.0, birth_density: birth_density(p0, a0) });

    let mut sol = MarginalSolution {
        lambda,
        times: vec![0.0],
        a: vec![a0],
        p: vec![p0],
        m: vec![m0],
        mass: vec![mass0],
        densities: Vec::with_capacity(snapshot_times.len()),
    };
    let mut splice = 0.0;
    let mut next_snap = 0;
    let record = |sol: &mut MarginalSolution, cloud: &Cloud, splice: f64, next_snap: &mut usize| {
        let t = *sol.times.last().unwrap();
        while *next_snap < snapshot_times.len() && (snapshot_times[*next_snap] - t).abs() <= 1e-9 * options.dt {
            let k = sol.times.len() - 1;
            sol.densities.push(snapshot(cloud, t, lambda, (sol.a[k], sol.p[k], sol.m[k]), splice, sol.mass[k]));
            *next_snap += 1;
        }
    };
    record(&mut sol, &cloud, splice, &mut next_snap);

    let mut scratch = Scratch::default();
    let mut steps = 0usize;
    let budget_rate = options.mass_abs / horizon;
    for w in grid.windows(2) {
        let (cell_start, cell_end) = (w[0], w[1]);
        let mut t = cell_start;
        let mut h = cell_end - cell_start;
        while t < cell_end {
            h = h.min(cell_end - t);
            let last = t + h >= cell_end - 1e-12 * h;
            let t1 = if last { cell_end } else { t + h };
            let h_eff = t1 - t;
            let a_t = *sol.a.last().unwrap();
            let p_t = *sol.p.last().unwrap();
            let mass_t = *sol.mass.last().unwrap();
            let out = advance(&mut cloud, &mut scratch, rate, lambda, h_eff, a_t, p_t, options.corrector_passes)?;
            let mass = out.mass_existing + 0.5 * h_eff * out.p;
            // local defect budget proportional to the step keeps the global drift below mass_abs
            if (mass - mass_t).abs() > 0.5 * budget_rate * h_eff && h_eff > options.dt * 1e-6 {
                scratch.restore(&mut cloud);
                h = 0.5 * h_eff;
                continue;
            }
            check_finite(t1, &[mass, out.p, out.m])?;
            if (mass - 1.0).abs() > options.mass_abs {
                return Err(Error::MassDrift { drift: mass - 1.0, tolerance: options.mass_abs, time: t1 });
            }
            splice = (-lambda * h_eff).exp() * splice + out.shift;
            let a1 = lambda * out.m + out.p;
            cloud.push(0.0, 0.5 * h_eff * out.p, Meta::Jump { birth: t1, birth_density: birth_density(out.p, a1) });
            sol.times.push(t1);
            sol.a.push(a1);
            sol.p.push(out.p);
            sol.m.push(out.m);
            sol.mass.push(mass);
            steps += 1;
            if steps % COMPACT_EVERY == 0 {
                cloud.compact(options.prune_survival);
            }
            t = t1;
            h = (2.0 * h_eff).min(options.dt);
        }
        record(&mut sol, &cloud, splice, &mut next_snap);
    }
    Ok(sol)
}

/// Saved node state for step rejection.
#[derive(Debug, Default)]
struct Scratch {
    pos: Vec<f64>,
    surv: Vec<f64>,
    rate: Vec<f64>,
    newest_weight: f64,
}

impl Scratch {
    fn restore(&self, cloud: &mut Cloud) {
        cloud.pos.clone_from(&self.pos);
        cloud.surv.clone_from(&self.surv);
        *cloud.weight.last_mut().unwrap() = self.newest_weight;
    }
}

struct StepOutcome {
    mass_existing: f64,
    p: f64,
    m: f64,
    /// `phi_{t,t+h}(0)`.
    shift: f64,
}

/// One predictor-corrector step of length `h`: the predictor holds `a_t`
/// fixed, each corrector pass uses the linear drift from `a_t` to the last
/// estimate of `a_{t+h}`. Survival factors use Simpson's rule in time.
#[allow(clippy::too_many_arguments)]
fn advance(
    cloud: &mut Cloud,
    scratch: &mut Scratch,
    rate: &RateFunction,
    lambda: f64,
    h: f64,
    a_t: f64,
    p_t: f64,
    passes: usize,
) -> Result<StepOutcome> {
    scratch.pos.clone_from(&cloud.pos);
    scratch.surv.clone_from(&cloud.surv);
    scratch.rate.clear();
    scratch.rate.extend(cloud.pos.iter().map(|y| rate.eval(*y)));
    scratch.newest_weight = *cloud.weight.last().unwrap();
    // the newest jump node gains the second half of its trapezoid weight in s
    *cloud.weight.last_mut().unwrap() += 0.5 * h * p_t;

    let decay = (-lambda * h).exp();
    let half_decay = (-0.5 * lambda * h).exp();
    let mut a_end = a_t;
    let mut out = StepOutcome { mass_existing: 0.0, p: 0.0, m: 0.0, shift: 0.0 };
    for _ in 0..=passes {
        let sigma = (a_end - a_t) / h;
        let shift = forced_response(lambda, h, a_t, sigma);
        let half_shift = forced_response(lambda, 0.5 * h, a_t, sigma);
        for k in 0..scratch.pos.len() {
            let y0 = scratch.pos[k];
            let y1 = decay * y0 + shift;
            let ym = half_decay * y0 + half_shift;
            let hazard = h / 6.0 * (scratch.rate[k] + 4.0 * rate.eval(ym) + rate.eval(y1));
            cloud.pos[k] = y1;
            cloud.surv[k] = scratch.surv[k] * (-hazard).exp();
        }
        let (mass, p, m) = cloud.moments(rate);
        if !(mass.is_finite() && p.is_finite() && m.is_finite()) {
            scratch.restore(cloud);
            return Err(Error::NonFinite(format!("marginal quadrature over a step of {h}")));
        }
        out = StepOutcome { mass_existing: mass, p, m, shift };
        a_end = lambda * m + p;
    }
    Ok(out)
}

fn check_finite(t: f64, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("marginal quadrature at t = {t}")))
    }
}

fn snapshot(cloud: &Cloud, t: f64, lambda: f64, apm: (f64, f64, f64), splice: f64, mass: f64) -> TransportedDensity {
    let mut jump = Vec::new();
    let mut initial = Vec::new();
    let mut atoms = Vec::new();
    let growth = (lambda * t).exp();
    for k in 0..cloud.pos.len() {
        let (position, survival) = (cloud.pos[k], cloud.surv[k]);
        match cloud.meta[k] {
            Meta::Jump { birth, birth_density } => jump.push(JumpSample {
                birth,
                position,
                survival,
                density: birth_density * (lambda * (t - birth)).exp() * survival,
            }),
            Meta::Initial { origin, g0 } => initial.push(InitialSample {
                origin,
                position,
                survival,
                mass: cloud.weight[k] * survival,
                density: g0 * survival * growth,
            }),
            Meta::Atom { origin } => atoms.push(AtomSample { origin, position, mass: cloud.weight[k] * survival }),
        }
    }
    TransportedDensity::new(t, apm, splice, mass, jump, initial, atoms)
}

/// `E[kappa_{0,t}(Y0)] + int_0^t p_s kappa_{s,t}(0) ds - 1`, with every
/// survival factor recomputed by adaptive quadrature along the solved drift.
/// The `s`-integral is the trapezoid rule on the solver grid.
pub fn last_jump_normalization(sol: &MarginalSolution, initial: &InitialLaw, rate: &RateFunction, t: f64, tol: f64) -> Result<f64> {
    Ok(last_jump_expectation(sol, initial, rate, t, |_| 1.0, tol)? - 1.0)
}

/// `int phi dg(t)` from the last-jump decomposition
/// `E[phi(flow_{0,t}(Y0)) kappa_{0,t}(Y0)] + int_0^t p_s kappa_{s,t}(0) phi(flow_{s,t}(0)) ds`,
/// independent of the node cloud: only the solved `a` and `p` paths are reused.
pub fn last_jump_expectation<F: Fn(f64) -> f64>(
    sol: &MarginalSolution,
    initial: &InitialLaw,
    rate: &RateFunction,
    t: f64,
    phi: F,
    tol: f64,
) -> Result<f64> {
    let flow = sol.flow()?;
    flow.drift().check_range(0.0, t)?;
    let never_jumped = |x: f64| phi(flow.apply(0.0, t, x)) * flow.survival(0.0, t, x, rate, tol);
    let never = match initial {
        InitialLaw::PointMass { x0 } => never_jumped(*x0),
        _ => {
            let gl = GaussLegendre::<f64>::new(8);
            let upper = initial.support_hint();
            let panels = 64;
            let h = upper / panels as f64;
            let mut total = 0.0;
            for k in 0..panels {
                for (x, w) in gl.mapped(k as f64 * h, (k + 1) as f64 * h) {
                    total += w * initial.density(x).unwrap_or(0.0) * never_jumped(x);
                }
            }
            total
        }
    };
    let end = sol.times.partition_point(|s| *s <= t + 1e-12 * (1.0 + t));
    let jumped_at = |k: usize| {
        let s = sol.times[k];
        sol.p[k] * flow.survival(s, t, 0.0, rate, tol) * phi(flow.apply(s, t, 0.0))
    };
    let mut jumped = 0.0;
    let mut prev = if end > 0 { jumped_at(0) } else { 0.0 };
    for k in 1..end {
        let next = jumped_at(k);
        jumped += 0.5 * (sol.times[k] - sol.times[k - 1]) * (prev + next);
        prev = next;
    }
    Ok(never + jumped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::solve_a_star;
    use crate::metrics::Cdf;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cfg(lambda: f64, rate: RateFunction, initial: InitialLaw, horizon: f64) -> SystemConfig {
        SystemConfig::new(1, lambda, rate, initial, horizon, 0).unwrap()
    }

    #[test]
    fn time_grid_merges_snapshots() {
        let g = time_grid(1.0, 0.25, &[0.3, 0.5]);
        assert_eq!(g, vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert_eq!(time_grid(1.0, 0.4, &[]), vec![0.0, 0.4, 0.8, 1.0]);
    }

    #[test]
    fn initial_snapshot_is_the_initial_law() {
        let c = cfg(1.0, RateFunction::quadratic(), InitialLaw::exponential(1.0).unwrap(), 1.0);
        let sol = solve_marginals(&c, 0.01, &[0.0]).unwrap();
        let d = &sol.densities[0];
        assert_abs_diff_eq!(sol.p[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.m[0], 1.0, epsilon = 1e-10);
        for y in [0.0, 0.3, 1.7, 5.0] {
            let exact = (-y as f64).exp();
            assert_abs_diff_eq!(d.density_at(y).unwrap(), exact, epsilon = 1e-5);
        }
        assert!(d.density_at(-1.0).is_err());
    }

    #[test]
    fn dirac_zero_is_a_fixed_point() {
        let c = cfg(1.0, RateFunction::quadratic(), InitialLaw::point_mass(0.0).unwrap(), 2.0);
        let sol = solve_marginals(&c, 0.01, &[1.0, 2.0]).unwrap();
        assert!(sol.a.iter().chain(&sol.p).chain(&sol.m).all(|v| *v == 0.0));
        let d = sol.density(2.0).unwrap();
        assert_eq!(d.atom_part.len(), 1);
        assert_eq!(d.atom_part[0].position, 0.0);
        assert_eq!(d.atom_part[0].mass, 1.0);
        assert_eq!(d.cdf(0.0), 1.0);
    }

    #[test]
    fn identities_hold_along_a_run() {
        let c = cfg(0.0, RateFunction::quadratic(), InitialLaw::exponential(1.0).unwrap(), 2.0);
        let snaps = [0.5, 1.0, 2.0];
        let sol = solve_marginals(&c, 2e-3, &snaps).unwrap();
        assert!(sol.max_mass_drift() <= 1e-4, "{}", sol.max_mass_drift());
        assert!(sol.max_identity_gap() <= 1e-14);
        assert!(sol.p.iter().skip(1).all(|p| *p > 0.0));
        for d in &sol.densities {
            assert_abs_diff_eq!(d.density_at(0.0).unwrap(), d.p / d.a, epsilon = 1e-12 * d.p / d.a);
            assert!((d.interpolant_mass() - 1.0).abs() <= 1e-4, "{}", d.interpolant_mass());
            let gap = last_jump_normalization(&sol, &c.initial, &c.rate, d.time, 1e-9).unwrap();
            assert!(gap.abs() <= 1e-4, "t = {}: {gap}", d.time);
            assert!(d.jump_part.iter().all(|s| s.survival > 0.0 && s.survival <= 1.0));
            assert!(d.initial_part.iter().all(|s| s.position >= d.splice - 1e-12));
        }
    }

    #[test]
    fn stationary_density_is_preserved() {
        let inv = solve_a_star(0.0, &RateFunction::linear(), 1e-12).unwrap();
        let law = inv.to_initial_law(4001).unwrap();
        let c = cfg(0.0, RateFunction::linear(), law, 2.0);
        let sol = solve_marginals(&c, 2e-3, &[2.0]).unwrap();
        for p in &sol.p {
            assert_abs_diff_eq!(*p, 2.0 / PI, epsilon = 1e-4);
        }
    }

    #[test]
    fn splice_is_continuous_when_g0_at_zero_is_one() {
        let c = cfg(0.0, RateFunction::linear(), InitialLaw::exponential(1.0).unwrap(), 1.0);
        let sol = solve_marginals(&c, 1e-3, &[1.0]).unwrap();
        let d = sol.density(1.0).unwrap();
        let (left, right) = d.splice_limits();
        let (left, right) = (left.unwrap(), right.unwrap());
        assert!((left - right).abs() <= 1e-3 * right, "{left} vs {right}");
    }

    #[test]
    fn rejects_bad_options() {
        let c = cfg(0.0, RateFunction::linear(), InitialLaw::exponential(1.0).unwrap(), 1.0);
        assert!(solve_marginals(&c, 0.0, &[]).is_err());
        assert!(solve_marginals(&c, 0.1, &[2.0]).is_err());
        let sol = solve_marginals(&c, 0.1, &[0.5]).unwrap();
        assert!(sol.density_at(0.7, 0.0).is_err());
        assert!(sol.density_at(0.5, 0.0).is_ok());
    }

    #[test]
    fn csv_exports() {
        let c = cfg(1.0, RateFunction::linear(), InitialLaw::point_mass(1.0).unwrap(), 0.2);
        let sol = solve_marginals(&c, 0.1, &[0.2]).unwrap();
        let csv = sol.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "time,a,p,m");
        assert_eq!(csv.lines().count(), sol.times.len() + 1);
        assert!(sol.times.len() >= 3);
        assert_eq!(*sol.times.last().unwrap(), 0.2);
        let d = sol.densities[0].to_csv();
        assert_eq!(d.lines().next().unwrap(), "y,density,part");
        assert!(d.lines().last().unwrap().ends_with(",atom"));
    }
}
