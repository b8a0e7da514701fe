//! Distances between empirical samples and laws, and log-log rate fits.

use crate::error::{Error, Result};
use crate::invariant::InvariantResult;
use crate::model::{InitialLaw, RateFunction};
use crate::quad::{trapezoid, GaussLegendre};
use crate::real::Real;

/// Number of panels across the law's range in [`w1_samples_vs_law`].
const W1_PANELS: f64 = 4096.0;

/// A one-dimensional law given by its distribution function.
pub trait Cdf<T> {
    fn cdf(&self, x: T) -> T;
    /// Point below which the law carries no mass.
    fn lower(&self) -> T;
    /// Point above which the remaining mass is negligible.
    fn upper(&self) -> T;
}

impl<T: Real> Cdf<T> for InvariantResult<T> {
    fn cdf(&self, x: T) -> T {
        InvariantResult::cdf(self, x)
    }
    fn lower(&self) -> T {
        T::zero()
    }
    fn upper(&self) -> T {
        self.numerical_support()
    }
}

impl Cdf<f64> for InitialLaw {
    fn cdf(&self, x: f64) -> f64 {
        InitialLaw::cdf(self, x)
    }
    fn lower(&self) -> f64 {
        0.0
    }
    fn upper(&self) -> f64 {
        self.support_hint()
    }
}

fn sorted<T: Real>(xs: &[T]) -> Result<Vec<T>> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("sample contains a non-finite value".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

/// Wasserstein-1 distance between two empirical measures of equal size:
/// the mean gap between order statistics.
pub fn w1_samples<T: Real>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { left: u.len(), right: v.len() });
    }
    if u.is_empty() {
        return Err(Error::InvalidArgument("W1 needs non-empty samples".into()));
    }
    let (u, v) = (sorted(u)?, sorted(v)?);
    let total = u.iter().zip(&v).fold(T::zero(), |acc, (x, y)| acc + (*x - *y).abs());
    Ok(total / T::from_usize(u.len()).unwrap())
}

/// `int_c^d |k - F(x)| dx` for nondecreasing `F`: split at the crossing,
/// with panels no wider than `h` on either side.
fn cell_gap<T: Real, L: Cdf<T> + ?Sized>(law: &L, k: T, c: T, d: T, h: T, gl: &GaussLegendre<T>) -> T {
    if d <= c {
        return T::zero();
    }
    let (fc, fd) = (law.cdf(c), law.cdf(d));
    let integrate = |lo: T, hi: T, above: bool| {
        let panels = ((hi - lo) / h).ceil().to_usize().unwrap_or(1).max(1);
        gl.composite(|x| if above { law.cdf(x) - k } else { k - law.cdf(x) }, lo, hi, panels).max(T::zero())
    };
    if fd <= k {
        return integrate(c, d, false);
    }
    if fc >= k {
        return integrate(c, d, true);
    }
    let (mut lo, mut hi) = (c, d);
    for _ in 0..60 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if law.cdf(mid) < k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    integrate(c, lo, false) + integrate(lo, d, true)
}

/// Wasserstein-1 distance between an empirical measure and a law,
/// `int |F_n - F| dx`, integrated cell by cell between order statistics.
pub fn w1_samples_vs_law<T: Real, L: Cdf<T> + ?Sized>(samples: &[T], law: &L) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("W1 needs a non-empty sample".into()));
    }
    let xs = sorted(samples)?;
    let gl = GaussLegendre::new(8);
    let n = T::from_usize(xs.len()).unwrap();
    let lo = law.lower().min(xs[0]);
    let hi = law.upper().max(*xs.last().unwrap());
    let h = (hi - lo) / T::lit(W1_PANELS);
    let mut total = cell_gap(law, T::zero(), lo, xs[0], h, &gl);
    for (k, w) in xs.windows(2).enumerate() {
        let level = T::from_usize(k + 1).unwrap() / n;
        total = total + cell_gap(law, level, w[0], w[1], h, &gl);
    }
    total = total + cell_gap(law, T::one(), *xs.last().unwrap(), hi, h, &gl);
    Ok(total)
}

/// Total variation between two densities tabulated on a common grid:
/// `(1/2) int |g1 - g2|` by the trapezoid rule.
pub fn tv_densities<T: Real>(xs: &[T], g1: &[T], g2: &[T]) -> Result<T> {
    if xs.len() != g1.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: g1.len() });
    }
    if g1.len() != g2.len() {
        return Err(Error::LengthMismatch { left: g1.len(), right: g2.len() });
    }
    if xs.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("TV grid must be sorted".into()));
    }
    let diff: Vec<T> = g1.iter().zip(g2).map(|(a, b)| (*a - *b).abs()).collect();
    Ok(T::lit(0.5) * trapezoid(xs, &diff))
}

/// `|H(x) - H(y)|` with `H(x) = f(x) + arctan x`.
pub fn h_distance<T: Real>(x: T, y: T, rate: &RateFunction<T>) -> T {
    (rate.h(x) - rate.h(y)).abs()
}

/// Mean of [`h_distance`] over paired samples.
pub fn mean_h_distance<T: Real>(xs: &[T], ys: &[T], rate: &RateFunction<T>) -> Result<T> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument("H-distance needs non-empty samples".into()));
    }
    let total = xs.iter().zip(ys).fold(T::zero(), |acc, (x, y)| acc + h_distance(*x, *y, rate));
    Ok(total / T::from_usize(xs.len()).unwrap())
}

/// Least-squares line through `(ln N, ln value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit<T> {
    pub points: Vec<(T, T)>,
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

/// Fits `ln value = intercept + slope ln N` to `(N, value)` pairs. At least
/// three pairs with positive coordinates, and two distinct `N`, are required.
pub fn fit_rate<T: Real>(pairs: &[(T, T)]) -> Result<RateFit<T>> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!("rate fit needs >= 3 points, got {}", pairs.len())));
    }
    if pairs.iter().any(|(n, v)| !(*n > T::zero() && *v > T::zero()) || !n.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidArgument("rate fit needs positive finite values".into()));
    }
    let points: Vec<(T, T)> = pairs.iter().map(|(n, v)| (n.ln(), v.ln())).collect();
    let k = T::from_usize(points.len()).unwrap();
    let mx = points.iter().fold(T::zero(), |a, p| a + p.0) / k;
    let my = points.iter().fold(T::zero(), |a, p| a + p.1) / k;
    let sxx = points.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let sxy = points.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let syy = points.iter().fold(T::zero(), |a, p| a + (p.1 - my) * (p.1 - my));
    if !(sxx > T::zero()) {
        return Err(Error::InvalidArgument("rate fit needs at least two distinct N".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = points.iter().fold(T::zero(), |a, p| {
        let r = p.1 - intercept - slope * p.0;
        a + r * r
    });
    let r_squared = if syy > T::zero() { (T::one() - sse / syy).max(T::zero()) } else { T::one() };
    Ok(RateFit { points, slope, intercept, r_squared })
}
