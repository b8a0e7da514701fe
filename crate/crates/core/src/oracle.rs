//! Independent reference solvers, compiled for tests only.
//!
//! None of these share code paths with the production solvers beyond the
//! rate function and the initial-law sampler.

use rand::Rng;
use rand_distr::StandardUniform;

use crate::error::{Error, Result};
use crate::model::{InitialLaw, RateFunction};
use crate::rng::StreamKey;

/// Density of the limit equation on a uniform cell-centred grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UpwindSolution {
    pub xs: Vec<f64>,
    pub density: Vec<f64>,
    pub p: f64,
    pub a: f64,
}

/// First-order upwind scheme for the conservative form of the strong equation
/// `d_t g + d_x((a_t - lambda x) g) = -f(x) g` on `[0, x_max]`, with inflow
/// flux `(a g)(t, 0) = p_t` and `a_t = lambda m_t + p_t` from midpoint sums.
/// The step obeys the CFL bound for the speed `a - lambda x`.
pub fn upwind_pde(
    lambda: f64,
    rate: &RateFunction,
    g0: impl Fn(f64) -> f64,
    x_max: f64,
    dx: f64,
    horizon: f64,
) -> Result<UpwindSolution> {
    if !(dx > 0.0 && x_max > dx && horizon > 0.0) {
        return Err(Error::InvalidArgument("upwind grid needs 0 < dx < x_max and T > 0".into()));
    }
    let cells = (x_max / dx).round() as usize;
    let xs: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * dx).collect();
    let fs: Vec<f64> = xs.iter().map(|x| rate.eval(*x)).collect();
    let mut g: Vec<f64> = xs.iter().map(|x| g0(*x)).collect();
    let mut next = g.clone();
    let moments = |g: &[f64]| {
        let p: f64 = g.iter().zip(&fs).map(|(g, f)| g * f).sum::<f64>() * dx;
        let m: f64 = g.iter().zip(&xs).map(|(g, x)| g * x).sum::<f64>() * dx;
        (p, lambda * m + p)
    };
    let (mut p, mut a) = moments(&g);
    let mut t = 0.0;
    while t < horizon {
        let speed = a.max(lambda * x_max).max(1e-12);
        let max_rate = fs.last().copied().unwrap_or(0.0);
        let dt = (0.5 * dx / speed).min(0.5 / max_rate.max(1e-12)).min(horizon - t);
        // speed at cell faces; faces at j dx
        let face = |j: usize| a - lambda * (j as f64) * dx;
        let flux = |j: usize, g: &[f64]| {
            let v = face(j);
            if j == 0 {
                return p;
            }
            if j == cells {
                return if v > 0.0 { v * g[cells - 1] } else { 0.0 };
            }
            if v > 0.0 {
                v * g[j - 1]
            } else {
                v * g[j]
            }
        };
        for j in 0..cells {
            next[j] = g[j] - dt / dx * (flux(j + 1, &g) - flux(j, &g)) - dt * fs[j] * g[j];
        }
        std::mem::swap(&mut g, &mut next);
        (p, a) = moments(&g);
        t += dt;
    }
    Ok(UpwindSolution { xs, density: g, p, a })
}

/// Time-stepped particle scheme: over each step every neuron spikes with
/// probability `f(x) dt`, spikes are applied in index order, then the drift
/// takes one explicit Euler step. Returns `(mean, standard error)` of the
/// empirical mean at the horizon over `replicates`.
pub fn euler_mean(
    n: usize,
    lambda: f64,
    rate: &RateFunction,
    initial: &InitialLaw,
    horizon: f64,
    dt: f64,
    replicates: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if n == 0 || replicates < 2 || !(dt > 0.0) {
        return Err(Error::InvalidArgument("Euler oracle needs n >= 1, >= 2 replicates and dt > 0".into()));
    }
    let steps = (horizon / dt).round() as usize;
    let kick = 1.0 / n as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut x = vec![0.0; n];
    for r in 0..replicates {
        let mut rng = StreamKey::new(seed, "euler-oracle").replicate(r).rng();
        for v in &mut x {
            *v = rng.sample(initial);
        }
        for _ in 0..steps {
            for i in 0..n {
                let u: f64 = rng.sample(StandardUniform);
                if u < rate.eval(x[i]) * dt {
                    for v in x.iter_mut() {
                        *v += kick;
                    }
                    x[i] = 0.0;
                }
            }
            if lambda > 0.0 {
                let mean = x.iter().sum::<f64>() / n as f64;
                for v in &mut x {
                    *v -= lambda * (*v - mean) * dt;
                }
            }
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        sum += mean;
        sum_sq += mean * mean;
    }
    let k = replicates as f64;
    let avg = sum / k;
    let var = ((sum_sq - k * avg * avg) / (k - 1.0)).max(0.0);
    Ok((avg, (var / k).sqrt()))
}

/// Kolmogorov-Smirnov statistic `sup |F_n - F|` of a sample against a cdf.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (k, x)| {
        let f = cdf(*x);
        d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n)
    })
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
