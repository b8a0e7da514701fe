use rand::Rng;
use rand_distr::{Exp1, StandardUniform};

use crate::error::{Error, Result};
use crate::model::{CharacteristicFlow, RateFunction};

/// A path of the limit process under a fixed drift: its start and jump times.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPath {
    pub y0: f64,
    pub horizon: f64,
    /// Increasing jump times in `(0, horizon]`.
    pub jumps: Vec<f64>,
}

impl LimitPath {
    /// Last jump at or before `t`, if any.
    pub fn last_jump(&self, t: f64) -> Option<f64> {
        let k = self.jumps.partition_point(|s| *s <= t);
        (k > 0).then(|| self.jumps[k - 1])
    }

    /// `Y_t = phi_{0,t}(Y_0)` before the first jump and `phi_{tau_t,t}(0)` after.
    pub fn value_at(&self, flow: &CharacteristicFlow, t: f64) -> f64 {
        match self.last_jump(t) {
            None => flow.apply(0.0, t, self.y0),
            Some(s) => flow.apply(s, t, 0.0),
        }
    }
}

/// Simulates the limit process from `y0` over `[0, horizon]`. On each drift
/// cell the flow is bounded by `y + int a` (decay only lowers it), so
/// `f(y + int_cell a)` dominates the spike rate there and thinning is exact.
pub fn simulate_nonlinear_path<R: Rng + ?Sized>(
    flow: &CharacteristicFlow,
    rate: &RateFunction,
    y0: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<LimitPath> {
    if !(y0 >= 0.0) || !y0.is_finite() {
        return Err(Error::InvalidArgument(format!("path start must be finite and >= 0, got {y0}")));
    }
    flow.drift().check_range(0.0, horizon)?;
    let times = flow.drift().times();
    let mut jumps = Vec::new();
    let (mut anchor_t, mut anchor_y) = (0.0, y0);
    let mut t = 0.0;
    let mut k = 0;
    while t < horizon {
        while k + 1 < times.len() && times[k + 1] <= t {
            k += 1;
        }
        let end = if k + 1 < times.len() { times[k + 1].min(horizon) } else { horizon };
        let y = flow.apply(anchor_t, t, anchor_y);
        let mut bound = rate.eval(y + flow.drift_integral(t, end));
        let mut s = t;
        loop {
            if bound <= 0.0 {
                break;
            }
            let e: f64 = rng.sample(Exp1);
            s += e / bound;
            if s > end {
                break;
            }
            let u: f64 = rng.sample(StandardUniform);
            if u * bound <= rate.eval(flow.apply(anchor_t, s, anchor_y)) {
                jumps.push(s);
                anchor_t = s;
                anchor_y = 0.0;
                bound = rate.eval(flow.drift_integral(s, end));
            }
        }
        t = end;
    }
    Ok(LimitPath { y0, horizon, jumps })
}
