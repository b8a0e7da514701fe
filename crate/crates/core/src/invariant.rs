//! Invariant probability measures of the nonlinear limit equation.
//!
//! Besides `delta_0`, the limit equation has exactly one invariant density
//!
//! ```text
//! g(x) = p / (a - lambda x) * exp(-int_0^x f(y) / (a - lambda y) dy),   0 <= x < a/lambda,
//! ```
//!
//! where `a = p + lambda m` is the unique positive root of
//! `Gamma(a) = int_0^{a/lambda} exp(-int_0^x f(y)/(a - lambda y) dy) dx = 1`
//! (with `a/lambda = inf` when `lambda = 0`). Once `a` is known,
//! `p = 1 / Gamma_1(a)` and `m = p Gamma_2(a)`, where
//! `Gamma_1 = int g/p` and `Gamma_2 = int x g/p`.
//!
//! For `lambda > 0` every integral is computed in the variable
//! `u = -ln(1 - lambda x / a)`, in which the inner integral becomes
//! `F(u) = (1/lambda) int_0^u f(x(v)) dv` and the singular endpoint
//! `x -> a/lambda` moves to `u -> inf` where the integrands decay exponentially.
//! For `lambda = 0` the inner integral is `F(x) = (int_0^x f) / a` in closed form.

use crate::error::{Error, Result};
use crate::model::{RateFunction, RateKind};
use crate::quad::{adaptive_simpson, GaussLegendre};
use crate::real::Real;

const GL_ORDER: usize = 16;
const MAX_BISECTIONS: usize = 200;
/// Largest increment of the inner integral allowed across one panel.
const PANEL_INCREMENT: f64 = 0.25;
/// Geometric levels of a graded segment; the neglected piece is `2^-40` of its length.
const GRADED_LEVELS: usize = 40;
/// Tail mass below which the outer integral is truncated.
const TAIL_CUTOFF: f64 = 1e-16;

/// Quadrature residuals of a computed invariant measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    /// `int g - 1`.
    pub normalization: T,
    /// `int f g - p`.
    pub rate_mean: T,
    /// `a - lambda int x g - int f g`.
    pub self_consistency: T,
    /// `Gamma(a) - 1`.
    pub fixed_point: T,
    /// Bound on the outer-integral mass dropped by truncation.
    pub tail_bound: T,
}

/// The non-trivial invariant measure.
#[derive(Debug, Clone)]
pub struct InvariantResult<T: Real = f64> {
    pub lambda: T,
    pub rate: RateFunction<T>,
    pub a_star: T,
    pub p: T,
    pub m: T,
    /// `a/lambda` for `lambda > 0`, `+inf` for `lambda = 0`.
    pub support_right: T,
    /// `(x, g(x))` on a uniform grid of the (numerical) support.
    pub density: Vec<(T, T)>,
    pub residuals: Residuals<T>,
    table: InnerTable<T>,
}

/// Cumulative inner integral `F` tabulated at panel boundaries.
#[derive(Debug, Clone)]
struct InnerTable<T> {
    a: T,
    lambda: T,
    /// panel boundaries (in `u` for lambda > 0, in `x` for lambda = 0)
    knots: Vec<T>,
    inner: Vec<T>,
    /// `f` is not smooth at 0 (non-integer power), so segments starting at 0 are graded
    graded: bool,
    /// invariant mass to the left of each knot
    cumulative: Vec<T>,
}

struct Integrals<T> {
    gamma: T,
    gamma1: T,
    gamma2: T,
    tail: T,
    table: InnerTable<T>,
}

impl<T: Real> InnerTable<T> {
    /// `x` as a function of the integration variable.
    #[inline]
    fn position(&self, v: T) -> T {
        if self.lambda > T::zero() {
            -(self.a / self.lambda) * (-v).exp_m1()
        } else {
            v
        }
    }

    /// Integration variable for the position `x`.
    fn variable(&self, x: T) -> T {
        if self.lambda > T::zero() {
            let r = self.lambda * x / self.a;
            if r >= T::one() {
                T::infinity()
            } else {
                -(-r).ln_1p()
            }
        } else {
            x
        }
    }

    /// Derivative of the inner integral in the integration variable.
    #[inline]
    fn inner_rate(&self, rate: &RateFunction<T>, v: T) -> T {
        if self.lambda > T::zero() {
            rate.eval(self.position(v)) / self.lambda
        } else {
            rate.eval(v) / self.a
        }
    }

    /// `int_lo^hi` of [`Self::inner_rate`]; a segment starting at 0 is split
    /// geometrically towards 0 when `f` is only finitely smooth there.
    fn segment(&self, rate: &RateFunction<T>, gl: &GaussLegendre<T>, lo: T, hi: T) -> T {
        if !(self.graded && lo == T::zero()) {
            return gl.integrate(|u| self.inner_rate(rate, u), lo, hi);
        }
        let half = T::lit(0.5);
        let mut total = T::zero();
        let mut right = hi;
        for _ in 0..GRADED_LEVELS {
            let left = right * half;
            total = total + gl.integrate(|u| self.inner_rate(rate, u), left, right);
            right = left;
        }
        total + gl.integrate(|u| self.inner_rate(rate, u), T::zero(), right)
    }

    fn inner_at(&self, rate: &RateFunction<T>, gl: &GaussLegendre<T>, v: T) -> T {
        if self.lambda == T::zero() {
            return rate.antiderivative(v) / self.a;
        }
        let k = self.knots.partition_point(|u| *u <= v).saturating_sub(1);
        let start = self.knots[k];
        if v == start {
            return self.inner[k];
        }
        let width = if k + 1 < self.knots.len() {
            self.knots[k + 1] - start
        } else {
            T::lit(PANEL_INCREMENT)
        };
        if k == 0 {
            return self.segment(rate, gl, start, v);
        }
        let panels = ((v - start) / width).ceil().to_usize().unwrap_or(1).max(1);
        self.inner[k] + gl.composite(|u| self.inner_rate(rate, u), start, v, panels)
    }
}

/// Runs the outer integrals for a given `a`.
fn integrals<T: Real>(a: T, lambda: T, rate: &RateFunction<T>, gl: &GaussLegendre<T>) -> Result<Integrals<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("Gamma needs a > 0, got {a}")));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let graded = match rate.kind() {
        RateKind::Power { xi, .. } => xi.fract() != T::zero(),
        RateKind::Polynomial { .. } => false,
    };
    let mut table =
        InnerTable { a, lambda, knots: vec![T::zero()], inner: vec![T::zero()], graded, cumulative: Vec::new() };
    let increment = T::lit(PANEL_INCREMENT);
    let h_min = T::lit(1e-9) * (T::one() + a);
    let h_cap = if lambda > T::zero() { increment } else { increment * (T::one() + a) };
    let (mut gamma, mut gamma1, mut gamma2) = (T::zero(), T::zero(), T::zero());
    let mut v = T::zero();
    let mut big_f = T::zero();
    let tail;
    loop {
        // panel width: keep the inner increment below PANEL_INCREMENT (F' is nondecreasing)
        let mut h = h_cap.max(increment * v * T::lit(0.1));
        while h > h_min && h * table.inner_rate(rate, v + h) > increment {
            h = h * T::lit(0.5);
        }
        let lo = v;
        let hi = v + h;
        for (node, w) in gl.mapped(lo, hi) {
            let f_node = if lambda > T::zero() {
                big_f + table.segment(rate, gl, lo, node)
            } else {
                rate.antiderivative(node) / a
            };
            let e = (-f_node).exp();
            let x = table.position(node);
            if lambda > T::zero() {
                // dx = (a/lambda) e^{-u} du and 1/(a - lambda x) dx = du/lambda
                gamma = gamma + w * e * (a / lambda) * (-node).exp();
                gamma1 = gamma1 + w * e / lambda;
                gamma2 = gamma2 + w * x * e / lambda;
            } else {
                gamma = gamma + w * e;
                gamma1 = gamma1 + w * e / a;
                gamma2 = gamma2 + w * x * e / a;
            }
        }
        big_f = if lambda > T::zero() {
            big_f + table.segment(rate, gl, lo, hi)
        } else {
            rate.antiderivative(hi) / a
        };
        v = hi;
        table.knots.push(v);
        table.inner.push(big_f);
        // F(w) >= F(v) + F'(v) (w - v) beyond v, so the remaining mass of the
        // slowest-decaying integrand (Gamma_2 for lambda = 0, Gamma_1 otherwise) is bounded by
        let slope = table.inner_rate(rate, v);
        let x = table.position(v);
        let bound = if slope > T::zero() {
            let base = (-big_f).exp() / slope;
            if lambda > T::zero() {
                base * (T::one() + x) / lambda
            } else {
                base * (x + T::one() / slope) * (T::one() + T::one() / a)
            }
        } else {
            T::infinity()
        };
        if bound < T::lit(TAIL_CUTOFF) || (-big_f).exp() == T::zero() {
            tail = bound;
            break;
        }
        if table.knots.len() > 2_000_000 {
            return Err(Error::NoConvergence(format!("Gamma outer integral did not decay (a = {a})")));
        }
    }
    if !(gamma.is_finite() && gamma1.is_finite() && gamma2.is_finite()) {
        return Err(Error::NonFinite(format!("Gamma integrals at a = {a}")));
    }
    Ok(Integrals { gamma, gamma1, gamma2, tail, table })
}

/// The monotone scalar function whose root `a* > lambda` selects the invariant density.
pub fn gamma<T: Real>(a: T, lambda: T, rate: &RateFunction<T>) -> Result<T> {
    let gl = GaussLegendre::new(GL_ORDER);
    Ok(integrals(a, lambda, rate, &gl)?.gamma)
}

/// Solves `Gamma(a) = 1` by bisection to `|Gamma(a) - 1| <= root_abs` and
/// assembles the invariant density.
pub fn solve_a_star<T: Real>(lambda: T, rate: &RateFunction<T>, root_abs: T) -> Result<InvariantResult<T>> {
    solve_a_star_with(lambda, rate, root_abs, 2001)
}

/// As [`solve_a_star`], with the number of tabulated density points.
pub fn solve_a_star_with<T: Real>(
    lambda: T,
    rate: &RateFunction<T>,
    root_abs: T,
    density_points: usize,
) -> Result<InvariantResult<T>> {
    if !(root_abs > T::zero()) {
        return Err(Error::InvalidArgument("root_abs must be > 0".into()));
    }
    let gl = GaussLegendre::new(GL_ORDER);
    let g = |a: T| integrals(a, lambda, rate, &gl).map(|i| i.gamma);

    // Gamma(lambda) < 1 for lambda > 0; for lambda = 0 shrink until below one.
    let mut lo = if lambda > T::zero() { lambda } else { T::lit(1e-3) };
    let mut g_lo = g(lo)?;
    while g_lo >= T::one() {
        lo = lo * T::lit(0.5);
        if lo < T::lit(1e-300) {
            return Err(Error::NoConvergence("could not bracket Gamma(a) = 1 from below".into()));
        }
        g_lo = g(lo)?;
    }
    let mut hi = (lo * T::lit(2.0)).max(T::one());
    let mut g_hi = g(hi)?;
    let mut doublings = 0;
    while g_hi <= T::one() {
        lo = hi;
        hi = hi * T::lit(2.0);
        g_hi = g(hi)?;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NoConvergence("could not bracket Gamma(a) = 1 from above".into()));
        }
    }
    let mut mid = (lo + hi) * T::lit(0.5);
    let mut converged = false;
    for _ in 0..MAX_BISECTIONS {
        mid = (lo + hi) * T::lit(0.5);
        let v = g(mid)?;
        if (v - T::one()).abs() <= root_abs {
            converged = true;
            break;
        }
        if v < T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "Gamma(a) = 1 not reached to {root_abs} after {MAX_BISECTIONS} bisections"
        )));
    }
    let a = mid;
    let ints = integrals(a, lambda, rate, &gl)?;
    let p = T::one() / ints.gamma1;
    let m = p * ints.gamma2;
    let support_right = if lambda > T::zero() { a / lambda } else { T::infinity() };

    let mut result = InvariantResult {
        lambda,
        rate: rate.clone(),
        a_star: a,
        p,
        m,
        support_right,
        density: Vec::new(),
        residuals: Residuals {
            normalization: T::zero(),
            rate_mean: T::zero(),
            self_consistency: T::zero(),
            fixed_point: ints.gamma - T::one(),
            tail_bound: ints.tail,
        },
        table: ints.table,
    };
    result.residuals = result.check_residuals(root_abs);
    result.table.cumulative = result.tabulate_cumulative(&gl);
    let right = result.numerical_support();
    let n = density_points.max(2);
    result.density = (0..n)
        .map(|k| {
            let x = right * T::from_usize(k).unwrap() / T::from_usize(n - 1).unwrap();
            (x, invariant_density(&result, x))
        })
        .collect();
    Ok(result)
}

impl<T: Real> InvariantResult<T> {
    /// Right end of the support, or the truncation point of the outer
    /// integral when the support is unbounded.
    pub fn numerical_support(&self) -> T {
        if self.lambda > T::zero() {
            self.support_right
        } else {
            *self.table.knots.last().unwrap()
        }
    }

    /// `int phi(x) g(x) dx` by adaptive Simpson in the integration variable.
    fn simpson_pairing<F: Fn(T) -> T>(&self, phi: F, tol: T) -> T {
        let gl = GaussLegendre::new(GL_ORDER);
        let vmax = *self.table.knots.last().unwrap();
        // integrate across table panels, prorating the tolerance
        let panels = self.table.knots.len() - 1;
        let per = tol / T::from_usize(panels.max(1)).unwrap();
        let integrand = |v: T| phi(self.table.position(v)) * self.weight(&gl, v);
        let mut total = T::zero();
        for w in self.table.knots.windows(2) {
            total = total + adaptive_simpson(integrand, w[0], w[1].min(vmax), per);
        }
        total
    }

    fn check_residuals(&self, root_abs: T) -> Residuals<T> {
        // residuals cannot be resolved below a few ulps of the unit mass
        let tol = (root_abs * T::lit(0.1)).max(T::lit(16.0) * T::epsilon());
        let mass = self.simpson_pairing(|_| T::one(), tol);
        let mean_f = self.simpson_pairing(|x| self.rate.eval(x), tol);
        let mean = self.simpson_pairing(|x| x, tol);
        Residuals {
            normalization: mass - T::one(),
            rate_mean: mean_f - self.p,
            self_consistency: self.a_star - self.lambda * mean - mean_f,
            ..self.residuals
        }
    }

    /// `true` when the residual triple is within `root_abs`, `10 root_abs`, `10 root_abs`.
    pub fn residuals_within(&self, root_abs: T) -> bool {
        let ten = T::lit(10.0);
        let r = &self.residuals;
        r.normalization.abs() <= root_abs
            && r.rate_mean.abs() <= ten * root_abs
            && r.self_consistency.abs() <= ten * root_abs
    }

    /// Density against the integration variable: `g(x(v)) x'(v)`.
    fn weight(&self, gl: &GaussLegendre<T>, v: T) -> T {
        let big_f = self.table.inner_at(&self.rate, gl, v);
        if self.lambda > T::zero() {
            self.p / self.lambda * (-big_f).exp()
        } else {
            self.p / self.a_star * (-big_f).exp()
        }
    }

    fn tabulate_cumulative(&self, gl: &GaussLegendre<T>) -> Vec<T> {
        let mut acc = T::zero();
        let mut out = vec![T::zero()];
        for w in self.table.knots.windows(2) {
            acc = acc + gl.integrate(|v| self.weight(gl, v), w[0], w[1]);
            out.push(acc);
        }
        out
    }

    /// Invariant cdf, from the per-panel masses plus one partial panel.
    pub fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let v = self.table.variable(x);
        let last = *self.table.knots.last().unwrap();
        if !v.is_finite() || v >= last {
            return T::one();
        }
        let gl = GaussLegendre::new(GL_ORDER);
        let k = self.table.knots.partition_point(|u| *u <= v).saturating_sub(1);
        let partial = gl.integrate(|u| self.weight(&gl, u), self.table.knots[k], v);
        (self.table.cumulative[k] + partial).min(T::one())
    }
}

impl InvariantResult<f64> {
    /// The invariant density as a tabulated initial law on `points` nodes
    /// spanning the numerical support.
    pub fn to_initial_law(&self, points: usize) -> Result<crate::model::InitialLaw> {
        let right = self.numerical_support();
        let n = points.max(2);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let x = right * k as f64 / (n - 1) as f64;
                (x, invariant_density(self, x))
            })
            .collect();
        crate::model::InitialLaw::truncated(&pts, right)
    }
}

/// Pointwise invariant density; zero outside `[0, support_right)`.
pub fn invariant_density<T: Real>(result: &InvariantResult<T>, x: T) -> T {
    if x < T::zero() || x >= result.support_right {
        return T::zero();
    }
    let gl = GaussLegendre::new(GL_ORDER);
    let table = &result.table;
    let v = table.variable(x);
    if !v.is_finite() {
        return T::zero();
    }
    let big_f = table.inner_at(&result.rate, &gl, v);
    if result.lambda > T::zero() {
        // p / (a - lambda x) = (p / a) e^{u}
        (result.p / result.a_star) * (v - big_f).exp()
    } else {
        (result.p / result.a_star) * (-big_f).exp()
    }
}

/// A smooth bounded test function with its derivative.
pub struct TestFunction<'a, T> {
    pub value: &'a dyn Fn(T) -> T,
    pub derivative: &'a dyn Fn(T) -> T,
}

/// Maximum over test functions of
/// `|int [phi(0) - phi(x)] f(x) g(x) dx + int phi'(x) (a - lambda x) g(x) dx|`,
/// the generator pairing that vanishes for an invariant measure.
pub fn stationarity_residual<T: Real>(result: &InvariantResult<T>, test_functions: &[TestFunction<'_, T>]) -> T {
    let gl = GaussLegendre::<T>::new(GL_ORDER);
    let table = &result.table;
    let (a, lambda, p) = (result.a_star, result.lambda, result.p);
    let mut worst = T::zero();
    for tf in test_functions {
        let phi0 = (tf.value)(T::zero());
        let mut total = T::zero();
        for w in table.knots.windows(2) {
            for (v, wt) in gl.mapped(w[0], w[1]) {
                let big_f = table.inner_at(&result.rate, &gl, v);
                let x = table.position(v);
                let jump = (phi0 - (tf.value)(x)) * result.rate.eval(x);
                let term = if lambda > T::zero() {
                    // g dx = (p/lambda) e^{-F} du, a - lambda x = a e^{-u}
                    p / lambda * (-big_f).exp() * (jump + (tf.derivative)(x) * a * (-v).exp())
                } else {
                    (p / a) * (-big_f).exp() * (jump + (tf.derivative)(x) * a)
                };
                total = total + wt * term;
            }
        }
        worst = worst.max(total.abs());
    }
    worst
}
