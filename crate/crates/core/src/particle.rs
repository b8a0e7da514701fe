//! Exact event-driven simulation of the `N`-particle system.
//!
//! Between spikes every potential relaxes exponentially toward the empirical
//! mean, which stays constant, so `x_i(t) = xbar + e^{-lambda (t - t_a)} (x_i(t_a) - xbar)`.
//! Spikes are realized by Poisson thinning: particle `i` owns a proposal
//! stream of rate `B_i = f(max(x_i(t_a), xbar))`, which dominates `f(x_i)`
//! until the next spike because the motion is monotone toward `xbar`. With
//! `lambda = 0` the rates are frozen, `B_i = f(x_i)` and every proposal is accepted.

use rand::Rng;
use rand_distr::{Exp1, StandardUniform};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvBuilder};
use crate::model::SystemConfig;
use crate::rng::{StreamKey, StreamRng};

/// Spikes between two full recomputations of the running mean.
const MEAN_REFRESH: u64 = 4096;
/// Default cap on accepted events per run.
pub const DEFAULT_EVENT_BUDGET: u64 = 100_000_000;

/// Potentials of the `N` neurons, anchored at the time of the last spike.
#[derive(Debug, Clone)]
pub struct ParticleState {
    t: f64,
    t_anchor: f64,
    anchor: Vec<f64>,
    xbar: f64,
    lambda: f64,
}

impl ParticleState {
    /// State with all anchors at time `t`.
    pub fn new(t: f64, x: Vec<f64>, lambda: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidConfig("particle count must be >= 1".into()));
        }
        if x.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("potentials must be finite and >= 0".into()));
        }
        let xbar = x.iter().sum::<f64>() / x.len() as f64;
        Ok(Self { t, t_anchor: t, anchor: x, xbar, lambda })
    }

    pub fn n(&self) -> usize {
        self.anchor.len()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn anchor_time(&self) -> f64 {
        self.t_anchor
    }

    /// Potentials at the anchor time.
    pub fn anchors(&self) -> &[f64] {
        &self.anchor
    }

    pub fn xbar(&self) -> f64 {
        self.xbar
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `x_i(t)` for `t` at or after the anchor time.
    #[inline]
    pub fn position(&self, i: usize, t: f64) -> f64 {
        relax(self.anchor[i], self.xbar, self.lambda, t - self.t_anchor)
    }

    /// All potentials at `t`.
    pub fn positions(&self, t: f64) -> Vec<f64> {
        (0..self.n()).map(|i| self.position(i, t)).collect()
    }

    /// Moves the anchors to `t >= anchor time`.
    pub fn advance_to(&mut self, t: f64) {
        debug_assert!(t >= self.t_anchor);
        if self.lambda > 0.0 && t > self.t_anchor {
            let decay = (-self.lambda * (t - self.t_anchor)).exp();
            let xbar = self.xbar;
            for x in &mut self.anchor {
                *x = (xbar + decay * (*x - xbar)).max(0.0);
            }
        }
        self.t_anchor = t;
        self.t = t;
    }

    /// Spike of particle `i` at the anchor time: `x_i -> 0`, all others `+1/N`.
    /// Returns the pre-spike potential.
    pub fn apply_spike(&mut self, i: usize) -> f64 {
        let n = self.n() as f64;
        let pre = self.anchor[i];
        let kick = 1.0 / n;
        for x in &mut self.anchor {
            *x += kick;
        }
        self.anchor[i] = 0.0;
        self.xbar += ((n - 1.0) / n - pre) / n;
        pre
    }

    /// Recomputes the running mean from the anchors.
    pub fn refresh_mean(&mut self) {
        self.xbar = self.anchor.iter().sum::<f64>() / self.n() as f64;
    }

    /// Dominating rate for particle `i` from the anchor time until the next spike.
    #[inline]
    pub fn bound(&self, i: usize, rate: &crate::model::RateFunction) -> f64 {
        if self.lambda > 0.0 {
            rate.eval(self.anchor[i].max(self.xbar))
        } else {
            rate.eval(self.anchor[i])
        }
    }
}

#[inline]
pub(crate) fn relax(x: f64, target: f64, lambda: f64, elapsed: f64) -> f64 {
    if lambda == 0.0 || elapsed == 0.0 {
        x
    } else {
        (target + (-lambda * elapsed).exp() * (x - target)).max(0.0)
    }
}

/// Draws the `N` initial potentials, particle `i` from the stream `(seed, "init", replicate, label_i)`.
pub fn init_system(config: &SystemConfig) -> Result<ParticleState> {
    init_system_with(config, 0, None)
}

/// [`init_system`] for a replicate, with optional stream labels per particle.
pub fn init_system_with(config: &SystemConfig, replicate: u64, labels: Option<&[u64]>) -> Result<ParticleState> {
    config.validate()?;
    let labels = stream_labels(config.n, labels)?;
    let x = labels
        .iter()
        .map(|label| {
            let mut rng = StreamKey::new(config.seed, "init").replicate(replicate).index(*label).rng();
            rng.sample(&config.initial)
        })
        .collect();
    ParticleState::new(0.0, x, config.lambda)
}

fn stream_labels(n: usize, labels: Option<&[u64]>) -> Result<Vec<u64>> {
    match labels {
        None => Ok((0..n as u64).collect()),
        Some(l) if l.len() == n => Ok(l.to_vec()),
        Some(l) => Err(Error::LengthMismatch { left: l.len(), right: n }),
    }
}

/// One accepted spike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub index: usize,
    /// Potential just before the spike.
    pub pre: f64,
}

/// Ordered record of spikes and thinning counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub spikes: u64,
    pub proposals: u64,
}

impl EventLog {
    /// Accepted over proposed; `1` when nothing was proposed.
    pub fn acceptance_ratio(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.spikes as f64 / self.proposals as f64
        }
    }

    /// CSV with columns `time,index,pre_potential`.
    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::new(&["time", "index", "pre_potential"]);
        for e in &self.events {
            csv.row([fmt_f64(e.time), e.index.to_string(), fmt_f64(e.pre)]);
        }
        csv.finish()
    }
}

/// Empirical measure at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    /// Potentials sorted ascending.
    pub values: Vec<f64>,
    pub mean: f64,
    pub mean_f: f64,
}

impl Snapshot {
    pub fn new(time: f64, mut values: Vec<f64>, rate: &crate::model::RateFunction) -> Self {
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mean_f = values.iter().map(|x| rate.eval(*x)).sum::<f64>() / n;
        Self { time, values, mean, mean_f }
    }

    /// Empirical quantile by the nearest-rank rule.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.values[k]
    }
}

/// Knobs of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub replicate: u64,
    pub event_budget: u64,
    pub record_events: bool,
    /// Stream label per particle; defaults to the particle index.
    pub stream_labels: Option<Vec<u64>>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { replicate: 0, event_budget: DEFAULT_EVENT_BUDGET, record_events: true, stream_labels: None }
    }
}

impl SimulationOptions {
    pub fn replicate(replicate: u64) -> Self {
        Self { replicate, ..Self::default() }
    }
}

/// Result of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    /// Initial potentials by particle index.
    pub initial: Vec<f64>,
    pub log: EventLog,
    pub snapshots: Vec<Snapshot>,
    /// Potentials at the horizon by particle index.
    pub terminal: Vec<f64>,
}

/// Binary tournament tree over candidate proposal times.
#[derive(Debug, Clone)]
pub(crate) struct MinTree {
    size: usize,
    node: Vec<(f64, usize)>,
}

impl MinTree {
    pub(crate) fn new(values: &[f64]) -> Self {
        let size = values.len().next_power_of_two();
        let mut node = vec![(f64::INFINITY, usize::MAX); 2 * size];
        for (i, v) in values.iter().enumerate() {
            node[size + i] = (*v, i);
        }
        let mut tree = Self { size, node };
        for k in (1..size).rev() {
            tree.pull(k);
        }
        tree
    }

    #[inline]
    fn pull(&mut self, k: usize) {
        let (l, r) = (self.node[2 * k], self.node[2 * k + 1]);
        self.node[k] = if r.0 < l.0 { r } else { l };
    }

    pub(crate) fn rebuild(&mut self, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.node[self.size + i] = (*v, i);
        }
        for k in (1..self.size).rev() {
            self.pull(k);
        }
    }

    pub(crate) fn update(&mut self, i: usize, v: f64) {
        let mut k = self.size + i;
        self.node[k] = (v, i);
        while k > 1 {
            k /= 2;
            self.pull(k);
        }
    }

    /// `(value, index)` of the smallest entry.
    #[inline]
    pub(crate) fn min(&self) -> (f64, usize) {
        self.node[1]
    }
}

fn check_snapshot_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0 && *t <= horizon)) {
        return Err(Error::InvalidArgument(format!("snapshot times must lie in [0, {horizon}]")));
    }
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("snapshot times must be sorted".into()));
    }
    Ok(())
}

pub(crate) fn exp_draw(rng: &mut StreamRng, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Exact simulation over `[0, T]` with snapshots, replicate 0.
pub fn simulate(config: &SystemConfig, snapshot_times: &[f64]) -> Result<SimulationOutput> {
    simulate_with(config, snapshot_times, &SimulationOptions::default())
}

/// Exact simulation with explicit options. Particle `i` draws its initial
/// potential from `(seed, "init", replicate, label_i)` and its proposals from
/// `(seed, "sim", replicate, label_i)`.
pub fn simulate_with(config: &SystemConfig, snapshot_times: &[f64], options: &SimulationOptions) -> Result<SimulationOutput> {
    config.validate()?;
    check_snapshot_times(snapshot_times, config.horizon)?;
    let labels = stream_labels(config.n, options.stream_labels.as_deref())?;
    let mut state = init_system_with(config, options.replicate, Some(&labels))?;
    let initial = state.anchors().to_vec();
    let rate = &config.rate;
    let n = config.n;
    let mut rngs: Vec<StreamRng> = labels
        .iter()
        .map(|l| StreamKey::new(config.seed, "sim").replicate(options.replicate).index(*l).rng())
        .collect();

    let mut bounds: Vec<f64> = (0..n).map(|i| state.bound(i, rate)).collect();
    let mut cand: Vec<f64> = (0..n).map(|i| exp_draw(&mut rngs[i], bounds[i])).collect();
    let mut tree = MinTree::new(&cand);
    let mut log = EventLog::default();
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let mut next_snap = 0;

    loop {
        let (c, i) = tree.min();
        while next_snap < snapshot_times.len() && snapshot_times[next_snap] < c {
            let s = snapshot_times[next_snap];
            snapshots.push(Snapshot::new(s, state.positions(s), rate));
            next_snap += 1;
        }
        if c > config.horizon {
            break;
        }
        log.proposals += 1;
        let u: f64 = rngs[i].sample(StandardUniform);
        let accept = if config.lambda == 0.0 { true } else { u * bounds[i] <= rate.eval(state.position(i, c)) };
        if !accept {
            cand[i] = c + exp_draw(&mut rngs[i], bounds[i]);
            tree.update(i, cand[i]);
            continue;
        }
        if log.spikes >= options.event_budget {
            return Err(Error::BudgetExceeded { budget: options.event_budget, time: c });
        }
        state.advance_to(c);
        let pre = state.apply_spike(i);
        log.spikes += 1;
        if options.record_events {
            log.events.push(Event { time: c, index: i, pre });
        }
        if log.spikes % MEAN_REFRESH == 0 {
            state.refresh_mean();
        }
        for j in 0..n {
            bounds[j] = state.bound(j, rate);
            cand[j] = c + exp_draw(&mut rngs[j], bounds[j]);
        }
        tree.rebuild(&cand);
    }
    let terminal = state.positions(config.horizon);
    Ok(SimulationOutput { initial, log, snapshots, terminal })
}

/// One failed a priori check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub kind: &'static str,
    pub value: f64,
    pub bound: f64,
}

/// Outcome of [`check_apriori`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundReport {
    pub envelope_checks: u64,
    pub mean_checks: u64,
    /// Largest `|mean(t) - reconstructed mean(t)|` over snapshots.
    pub max_mean_error: f64,
    /// Smallest `envelope - value` over all envelope checks.
    pub min_envelope_slack: f64,
    pub violations: Vec<Violation>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tolerance of the mean reconstruction from the event log.
pub const MEAN_RECONSTRUCTION_TOL: f64 = 1e-9;

/// Path-wise a priori checks on a finished run.
///
/// * Envelope: `X^i_t <= X^i_0 + (4 lambda t + 4)(mean X_0 + Z_t)` with
///   `Z_t = (#spikes before t) / N`, checked for the spiking particle at every
///   spike and for every order statistic at every snapshot.
/// * Mean identity: `mean(t) = mean(0) + N^{-1} sum_{spikes <= t} ((N-1)/N - pre)`.
pub fn check_apriori(output: &SimulationOutput, config: &SystemConfig) -> BoundReport {
    let n = output.initial.len() as f64;
    let lambda = config.lambda;
    let mean0 = output.initial.iter().sum::<f64>() / n;
    let envelope = |t: f64, count: usize| (4.0 * lambda * t + 4.0) * (mean0 + count as f64 / n);
    let mut report = BoundReport { min_envelope_slack: f64::INFINITY, ..BoundReport::default() };
    let tol = 1e-12;

    for (k, e) in output.log.events.iter().enumerate() {
        let bound = output.initial[e.index] + envelope(e.time, k);
        report.envelope_checks += 1;
        report.min_envelope_slack = report.min_envelope_slack.min(bound - e.pre);
        if e.pre < 0.0 || e.pre > bound + tol {
            report.violations.push(Violation { time: e.time, kind: "envelope", value: e.pre, bound });
        }
    }
    let mut sorted0 = output.initial.clone();
    sorted0.sort_by(f64::total_cmp);
    let events = &output.log.events;
    let mut count = 0usize;
    let mut drift_sum = 0.0;
    for snap in &output.snapshots {
        while count < events.len() && events[count].time <= snap.time {
            drift_sum += (n - 1.0) / n - events[count].pre;
            count += 1;
        }
        let env = envelope(snap.time, count);
        for (x, x0) in snap.values.iter().zip(&sorted0) {
            let bound = x0 + env;
            report.envelope_checks += 1;
            report.min_envelope_slack = report.min_envelope_slack.min(bound - x);
            if *x < 0.0 || *x > bound + tol {
                report.violations.push(Violation { time: snap.time, kind: "envelope", value: *x, bound });
            }
        }
        if output.log.events.len() as u64 == output.log.spikes {
            let predicted = mean0 + drift_sum / n;
            let err = (snap.mean - predicted).abs();
            report.mean_checks += 1;
            report.max_mean_error = report.max_mean_error.max(err);
            if err > MEAN_RECONSTRUCTION_TOL {
                report.violations.push(Violation { time: snap.time, kind: "mean", value: snap.mean, bound: predicted });
            }
        }
    }
    report
}

/// Snapshot CSV with columns `replicate,time,particle_rank,value`.
pub fn snapshots_csv<'a, I>(runs: I) -> String
where
    I: IntoIterator<Item = (u64, &'a [Snapshot])>,
{
    let mut csv = CsvBuilder::new(&["replicate", "time", "particle_rank", "value"]);
    for (rep, snaps) in runs {
        for s in snaps {
            for (k, v) in s.values.iter().enumerate() {
                csv.row([rep.to_string(), fmt_f64(s.time), k.to_string(), fmt_f64(*v)]);
            }
        }
    }
    csv.finish()
}

/// Aggregated snapshot CSV: `replicate,time,mean,mean_f,q05,q25,q50,q75,q95`.
pub fn snapshots_summary_csv<'a, I>(runs: I) -> String
where
    I: IntoIterator<Item = (u64, &'a [Snapshot])>,
{
    let mut csv = CsvBuilder::new(&["replicate", "time", "mean", "mean_f", "q05", "q25", "q50", "q75", "q95"]);
    for (rep, snaps) in runs {
        for s in snaps {
            let mut row = vec![rep.to_string(), fmt_f64(s.time), fmt_f64(s.mean), fmt_f64(s.mean_f)];
            row.extend([0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|q| fmt_f64(s.quantile(*q))));
            csv.row(row);
        }
    }
    csv.finish()
}
