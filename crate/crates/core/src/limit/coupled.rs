use rand::Rng;
use rand_distr::StandardUniform;

use crate::error::{Error, Result};
use crate::metrics::w1_samples_vs_law;
use crate::model::SystemConfig;
use crate::particle::{exp_draw, MinTree, ParticleState, DEFAULT_EVENT_BUDGET};
use crate::rng::{StreamKey, StreamRng};

use super::solver::MarginalSolution;

/// Knobs of [`simulate_coupled`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledOptions {
    pub replicate: u64,
    /// Times at which statistics are taken; each must be a stored snapshot of the solution.
    pub snapshot_times: Vec<f64>,
    /// Number of equal windows over which the limit-path bounds are refreshed.
    pub windows: usize,
    pub event_budget: u64,
}

impl CoupledOptions {
    pub fn new(replicate: u64, snapshot_times: Vec<f64>) -> Self {
        Self { replicate, snapshot_times, windows: 256, event_budget: DEFAULT_EVENT_BUDGET }
    }
}

/// Coupling statistics at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledSnapshot {
    pub time: f64,
    /// `N^{-1} sum |X^i - Y^i|`.
    pub mean_abs_diff: f64,
    /// `N^{-1} sum |H(X^i) - H(Y^i)|`.
    pub mean_h_diff: f64,
    /// `W1(N^{-1} sum delta_{X^i}, g(t))`.
    pub w1_to_limit: f64,
}

/// Result of one coupled replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledStats {
    pub n: usize,
    pub replicate: u64,
    pub snapshots: Vec<CoupledSnapshot>,
    pub x_spikes: u64,
    pub y_jumps: u64,
    pub proposals: u64,
}

/// Simulates the particle system together with `N` limit paths driven by the
/// same Poisson measures. Index `i` starts both at `X^i_0` drawn from
/// `(seed, "chaos-init", replicate, i)` and owns one proposal stream
/// `(seed, "chaos", replicate, i)` of rate `B_i >= max(f(X^i), f(Y^i))`; a
/// proposal `(s, u)` spikes `X^i` iff `u B_i <= f(X^i(s-))` and resets `Y^i`
/// iff `u B_i <= f(Y^i(s-))`. The limit paths follow the solved drift.
pub fn simulate_coupled(config: &SystemConfig, sol: &MarginalSolution, options: &CoupledOptions) -> Result<CoupledStats> {
    config.validate()?;
    let horizon = config.horizon;
    if sol.horizon() < horizon - 1e-12 * horizon {
        return Err(Error::InvalidArgument(format!("solution horizon {} below {horizon}", sol.horizon())));
    }
    if (sol.lambda - config.lambda).abs() > 0.0 {
        return Err(Error::InvalidArgument("solution and system disagree on lambda".into()));
    }
    let laws = options
        .snapshot_times
        .iter()
        .map(|t| sol.density(*t).ok_or_else(|| Error::InvalidArgument(format!("no solver snapshot at t = {t}"))))
        .collect::<Result<Vec<_>>>()?;
    if laws.iter().any(|d| d.time > horizon) || options.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("coupled snapshot times must be sorted in [0, T]".into()));
    }
    if options.windows == 0 {
        return Err(Error::InvalidConfig("coupled windows must be >= 1".into()));
    }
    let flow = sol.flow()?;
    let rate = &config.rate;
    let n = config.n;
    let rep = options.replicate;

    let x0: Vec<f64> = (0..n as u64)
        .map(|i| StreamKey::new(config.seed, "chaos-init").replicate(rep).index(i).rng().sample(&config.initial))
        .collect();
    let mut xs = ParticleState::new(0.0, x0.clone(), config.lambda)?;
    let mut y_anchor = x0;
    let mut y_time = vec![0.0; n];
    let mut rngs: Vec<StreamRng> =
        (0..n as u64).map(|i| StreamKey::new(config.seed, "chaos").replicate(rep).index(i).rng()).collect();

    let window = horizon / options.windows as f64;
    let window_end = |t: f64| (((t / window).floor() + 1.0) * window).min(horizon);
    let y_at = |i: usize, t: f64, ya: &[f64], yt: &[f64]| flow.apply(yt[i], t, ya[i]);

    let mut bounds = vec![0.0; n];
    let mut cand = vec![f64::INFINITY; n];
    let mut tree = MinTree::new(&cand);
    let refresh = |from: f64,
                       xs: &ParticleState,
                       ya: &[f64],
                       yt: &[f64],
                       rngs: &mut [StreamRng],
                       bounds: &mut [f64],
                       cand: &mut [f64],
                       tree: &mut MinTree| {
        let end = window_end(from);
        let lift = flow.drift_integral(from, end);
        for i in 0..n {
            let by = rate.eval(y_at(i, from, ya, yt) + lift);
            bounds[i] = xs.bound(i, rate).max(by);
            cand[i] = from + exp_draw(&mut rngs[i], bounds[i]);
        }
        tree.rebuild(cand);
        end
    };
    let mut current_end = refresh(0.0, &xs, &y_anchor, &y_time, &mut rngs, &mut bounds, &mut cand, &mut tree);

    let mut stats = CoupledStats { n, replicate: rep, snapshots: Vec::new(), x_spikes: 0, y_jumps: 0, proposals: 0 };
    let mut next_snap = 0;
    loop {
        let (c, i) = tree.min();
        // snapshots strictly before the next proposal or refresh
        while next_snap < laws.len() && laws[next_snap].time < c && laws[next_snap].time <= current_end {
            let s = laws[next_snap].time;
            let x = xs.positions(s);
            let y: Vec<f64> = (0..n).map(|j| y_at(j, s, &y_anchor, &y_time)).collect();
            let abs = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
            let hd = x.iter().zip(&y).map(|(a, b)| (rate.h(*a) - rate.h(*b)).abs()).sum::<f64>() / n as f64;
            let w1 = w1_samples_vs_law(&x, laws[next_snap])?;
            stats.snapshots.push(CoupledSnapshot { time: s, mean_abs_diff: abs, mean_h_diff: hd, w1_to_limit: w1 });
            next_snap += 1;
        }
        if c > current_end {
            if current_end >= horizon {
                break;
            }
            current_end = refresh(current_end, &xs, &y_anchor, &y_time, &mut rngs, &mut bounds, &mut cand, &mut tree);
            continue;
        }
        stats.proposals += 1;
        let u: f64 = rngs[i].sample(StandardUniform);
        let level = u * bounds[i];
        let x_jump = level <= rate.eval(xs.position(i, c));
        let y_jump = level <= rate.eval(y_at(i, c, &y_anchor, &y_time));
        if y_jump {
            y_anchor[i] = 0.0;
            y_time[i] = c;
            stats.y_jumps += 1;
        }
        if x_jump {
            if stats.x_spikes >= options.event_budget {
                return Err(Error::BudgetExceeded { budget: options.event_budget, time: c });
            }
            xs.advance_to(c);
            xs.apply_spike(i);
            stats.x_spikes += 1;
            if stats.x_spikes.is_multiple_of(4096) {
                xs.refresh_mean();
            }
            current_end = refresh(c, &xs, &y_anchor, &y_time, &mut rngs, &mut bounds, &mut cand, &mut tree);
        } else {
            cand[i] = c + exp_draw(&mut rngs[i], bounds[i]);
            tree.update(i, cand[i]);
        }
    }
    Ok(stats)
}
