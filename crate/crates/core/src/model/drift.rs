use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

use super::{RateFunction, SystemConfig};

/// The mean-field input `a_t = lambda E[Y_t] + E[f(Y_t)]` on a time grid,
/// interpolated piecewise linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    times: Vec<f64>,
    a: Vec<f64>,
}

impl DriftSeries {
    pub fn new(times: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if times.len() != a.len() {
            return Err(Error::LengthMismatch { left: times.len(), right: a.len() });
        }
        if times.len() < 2 {
            return Err(Error::InvalidArgument("drift series needs at least two nodes".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times[0].is_finite() {
            return Err(Error::InvalidArgument("drift times must be strictly increasing".into()));
        }
        if let Some(v) = a.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("drift values must be finite and >= 0, got {v}")));
        }
        Ok(Self { times, a })
    }

    /// `a_t = value` on `[0, horizon]` with `cells` equal steps.
    pub fn constant(value: f64, horizon: f64, cells: usize) -> Result<Self> {
        let cells = cells.max(1);
        let times = (0..=cells).map(|k| horizon * k as f64 / cells as f64).collect();
        Self::new(times, vec![value; cells + 1])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn slack(&self) -> f64 {
        1e-12 * (1.0 + self.end().abs())
    }

    pub fn check_range(&self, s: f64, t: f64) -> Result<()> {
        if !(s <= t) {
            return Err(Error::InvalidArgument(format!("time range [{s}, {t}] is reversed")));
        }
        if s < self.start() - self.slack() || t > self.end() + self.slack() {
            return Err(Error::OutOfGrid { s, t, lo: self.start(), hi: self.end() });
        }
        Ok(())
    }

    /// Index `k` of the cell `[t_k, t_{k+1}]` containing `t` (clamped to the grid).
    pub fn cell(&self, t: f64) -> usize {
        self.times.partition_point(|v| *v <= t).saturating_sub(1).min(self.times.len() - 2)
    }

    pub fn a_at(&self, t: f64) -> f64 {
        let k = self.cell(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.a[k] + w * (self.a[k + 1] - self.a[k])
    }

    /// Grid nodes strictly inside `(s, t)`, framed by `s` and `t`.
    fn breakpoints(&self, s: f64, t: f64) -> Vec<f64> {
        let mut pts = vec![s];
        pts.extend(self.times.iter().copied().filter(|v| *v > s && *v < t));
        pts.push(t);
        pts
    }
}

/// `int_0^tau e^{-lambda (tau - u)} (alpha + sigma u) du`.
pub(crate) fn forced_response(lambda: f64, tau: f64, alpha: f64, sigma: f64) -> f64 {
    if lambda == 0.0 {
        return alpha * tau + 0.5 * sigma * tau * tau;
    }
    let z = lambda * tau;
    let first = -(-z).exp_m1() / lambda;
    let second = if z < 1e-3 {
        tau * tau * (0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0)
    } else {
        (tau - first) / lambda
    };
    alpha * first + sigma * second
}

/// Closed-form characteristics `phi_{s,t}(x)` for a piecewise-linear drift.
///
/// Uses `phi_{s,t}(x) = e^{-lambda (t-s)} x + phi_{0,t}(0) - e^{-lambda (t-s)} phi_{0,s}(0)`
/// with `phi_{0,t_k}(0)` tabulated on the drift grid.
#[derive(Debug, Clone)]
pub struct CharacteristicFlow {
    lambda: f64,
    drift: DriftSeries,
    zero: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CharacteristicFlow {
    pub fn new(lambda: f64, drift: DriftSeries) -> Self {
        let n = drift.times.len();
        let mut zero = vec![0.0; n];
        let mut cumulative = vec![0.0; n];
        for k in 1..n {
            let h = drift.times[k] - drift.times[k - 1];
            let sigma = (drift.a[k] - drift.a[k - 1]) / h;
            zero[k] = (-lambda * h).exp() * zero[k - 1] + forced_response(lambda, h, drift.a[k - 1], sigma);
            cumulative[k] = cumulative[k - 1] + 0.5 * h * (drift.a[k] + drift.a[k - 1]);
        }
        Self { lambda, drift, zero, cumulative }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn drift(&self) -> &DriftSeries {
        &self.drift
    }

    /// `phi_{t0,t}(0)` where `t0` is the first grid time.
    pub fn zero_flow(&self, t: f64) -> f64 {
        let d = &self.drift;
        let k = d.cell(t);
        let tau = (t - d.times[k]).max(0.0);
        let sigma = (d.a[k + 1] - d.a[k]) / (d.times[k + 1] - d.times[k]);
        (-self.lambda * tau).exp() * self.zero[k] + forced_response(self.lambda, tau, d.a[k], sigma)
    }

    /// `phi_{s,t}(x)`.
    #[inline]
    pub fn apply(&self, s: f64, t: f64, x: f64) -> f64 {
        if t <= s {
            return x;
        }
        let decay = (-self.lambda * (t - s)).exp();
        (decay * x + (self.zero_flow(t) - decay * self.zero_flow(s))).max(0.0)
    }

    /// `int_s^t a_u du`.
    pub fn drift_integral(&self, s: f64, t: f64) -> f64 {
        let cum = |t: f64| {
            let d = &self.drift;
            let k = d.cell(t);
            let tau = (t - d.times[k]).max(0.0);
            let sigma = (d.a[k + 1] - d.a[k]) / (d.times[k + 1] - d.times[k]);
            self.cumulative[k] + tau * d.a[k] + 0.5 * sigma * tau * tau
        };
        cum(t) - cum(s)
    }

    /// `kappa_{s,t}(x) = exp(-int_s^t f(phi_{s,u}(x)) du)` by adaptive Simpson on each drift cell.
    pub fn survival(&self, s: f64, t: f64, x: f64, rate: &RateFunction, tol: f64) -> f64 {
        if t <= s {
            return 1.0;
        }
        let pts = self.drift.breakpoints(s, t);
        let per_cell = tol / (pts.len() - 1) as f64;
        let integral: f64 = pts
            .windows(2)
            .map(|w| adaptive_simpson(|u| rate.eval(self.apply(s, u, x)), w[0], w[1], per_cell))
            .sum();
        (-integral).exp()
    }
}

/// `phi_{s,t}(x) = e^{-lambda (t-s)} x + int_s^t e^{-lambda (t-u)} a_u du`, the integral by
/// adaptive Simpson on each drift cell at total tolerance `tol`.
pub fn flow(s: f64, t: f64, x: f64, lambda: f64, drift: &DriftSeries, tol: f64) -> Result<f64> {
    drift.check_range(s, t)?;
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("flow start must be >= 0, got {x}")));
    }
    if t == s {
        return Ok(x);
    }
    let pts = drift.breakpoints(s, t);
    let per_cell = tol / (pts.len() - 1) as f64;
    let forcing: f64 = pts
        .windows(2)
        .map(|w| adaptive_simpson(|u| (-lambda * (t - u)).exp() * drift.a_at(u), w[0], w[1], per_cell))
        .sum();
    Ok((-lambda * (t - s)).exp() * x + forcing)
}

/// `kappa_{s,t}(x)`: probability of no spike along the flow from `x` over `[s, t]`.
pub fn survival(s: f64, t: f64, x: f64, config: &SystemConfig, drift: &DriftSeries) -> Result<f64> {
    drift.check_range(s, t)?;
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("survival start must be >= 0, got {x}")));
    }
    let flow = CharacteristicFlow::new(config.lambda, drift.clone());
    Ok(flow.survival(s, t, x, &config.rate, config.tolerances.quadrature_abs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InitialLaw;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TOL: f64 = 1e-8;

    fn config(lambda: f64, rate: RateFunction) -> SystemConfig {
        SystemConfig::new(1, lambda, rate, InitialLaw::point_mass(1.0).unwrap(), 3.0, 0).unwrap()
    }

    #[test]
    fn flow_closed_forms() {
        let ones = DriftSeries::constant(1.0, 3.0, 30).unwrap();
        let zeros = DriftSeries::constant(0.0, 3.0, 30).unwrap();
        assert_abs_diff_eq!(flow(0.0, 2.0, 0.7, 0.0, &ones, TOL).unwrap(), 2.7, epsilon = 2e-8);
        assert_abs_diff_eq!(flow(0.5, 2.0, 0.7, 1.0, &zeros, TOL).unwrap(), (-1.5f64).exp() * 0.7, epsilon = 1e-12);
        let e = (-1.5f64).exp();
        assert_abs_diff_eq!(flow(0.5, 2.0, 0.7, 1.0, &ones, TOL).unwrap(), e * 0.7 + 1.0 - e, epsilon = 2e-8);
        assert_eq!(flow(1.3, 1.3, 0.7, 1.0, &ones, TOL).unwrap(), 0.7);
    }

    #[test]
    fn flow_rejects_out_of_grid() {
        let ones = DriftSeries::constant(1.0, 3.0, 30).unwrap();
        assert!(matches!(flow(0.0, 4.0, 0.0, 0.0, &ones, TOL), Err(Error::OutOfGrid { .. })));
        assert!(flow(2.0, 1.0, 0.0, 0.0, &ones, TOL).is_err());
        assert!(survival(0.0, 5.0, 0.0, &config(0.0, RateFunction::linear()), &ones).is_err());
    }

    #[test]
    fn survival_closed_forms() {
        let zeros = DriftSeries::constant(0.0, 3.0, 30).unwrap();
        let ones = DriftSeries::constant(1.0, 3.0, 30).unwrap();
        let cfg = config(0.0, RateFunction::linear());
        assert_abs_diff_eq!(survival(0.0, 2.0, 1.0, &cfg, &zeros).unwrap(), (-2.0f64).exp(), epsilon = 1e-9);
        assert_eq!(survival(0.0, 2.0, 0.0, &config(1.0, RateFunction::quadratic()), &zeros).unwrap(), 1.0);
        assert_abs_diff_eq!(survival(0.0, 2.0, 0.0, &cfg, &ones).unwrap(), (-2.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(survival(0.0, 1.5, 0.0, &cfg, &ones).unwrap(), (-1.125f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn drift_series_errors() {
        assert!(DriftSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(DriftSeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(DriftSeries::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    fn varying_drift() -> DriftSeries {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let a = times.iter().map(|t| 0.5 + (1.3 * t).sin().abs() + 0.2 * t).collect();
        DriftSeries::new(times, a).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn flow_semigroup(r in 0.0..4.0f64, d1 in 0.0..1.0f64, d2 in 0.0..1.0f64, x in 0.0..5.0f64, lambda in 0.0..2.0f64) {
            let drift = varying_drift();
            let s = (r + d1 * (4.0 - r)).min(4.0);
            let t = (s + d2 * (4.0 - s)).min(4.0);
            let direct = flow(r, t, x, lambda, &drift, TOL).unwrap();
            let inner = flow(r, s, x, lambda, &drift, TOL).unwrap();
            let composed = flow(s, t, inner, lambda, &drift, TOL).unwrap();
            prop_assert!((direct - composed).abs() <= 2.0 * TOL);
            // closed-form route agrees with the quadrature route
            let exact = CharacteristicFlow::new(lambda, drift.clone());
            prop_assert!((exact.apply(r, t, x) - direct).abs() <= 2.0 * TOL);
        }

        #[test]
        fn flow_slope_is_exponential(s in 0.0..2.0f64, d in 0.0..2.0f64, x in 0.0..5.0f64, h in 0.01..1.0f64, lambda in 0.0..2.0f64) {
            let drift = varying_drift();
            let t = s + d;
            let lo = flow(s, t, x, lambda, &drift, 1e-11).unwrap();
            let hi = flow(s, t, x + h, lambda, &drift, 1e-11).unwrap();
            prop_assert!(hi > lo);
            prop_assert!(((hi - lo) / h - (-lambda * d).exp()).abs() < 1e-8);
        }

        #[test]
        fn survival_multiplicative(r in 0.0..2.0f64, d1 in 0.0..1.0f64, d2 in 0.0..1.0f64, x in 0.0..2.0f64, lambda in 0.0..2.0f64) {
            let drift = varying_drift();
            let flow = CharacteristicFlow::new(lambda, drift);
            let rate = RateFunction::quadratic();
            let (s, t) = (r + d1, r + d1 + d2);
            let whole = flow.survival(r, t, x, &rate, 1e-11);
            let first = flow.survival(r, s, x, &rate, 1e-11);
            let second = flow.survival(s, t, flow.apply(r, s, x), &rate, 1e-11);
            prop_assert!((whole - first * second).abs() < 1e-8);
            prop_assert!(whole <= first + 1e-12);
        }
    }

    #[test]
    fn drift_integral_is_trapezoid_exact() {
        let drift = varying_drift();
        let flow = CharacteristicFlow::new(0.0, drift.clone());
        // with lambda = 0 the zero flow is the integral of a
        for t in [0.0, 0.33, 1.7, 4.0] {
            assert_abs_diff_eq!(flow.drift_integral(0.0, t), flow.zero_flow(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn forced_response_series_branch_matches() {
        let (tau, alpha, sigma) = (0.3, 1.2, -0.4);
        for lambda in [1e-6, 1e-4, 2e-3, 0.5] {
            let quad = adaptive_simpson(|u: f64| (-lambda * (tau - u)).exp() * (alpha + sigma * u), 0.0, tau, 1e-14);
            assert_abs_diff_eq!(forced_response(lambda, tau, alpha, sigma), quad, epsilon = 1e-13);
        }
    }
}
