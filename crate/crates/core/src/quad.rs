//! Quadrature rules shared by the model, the invariant solver and the metrics.

use crate::real::Real;

/// Adaptive Simpson quadrature. Intervals are bisected until two successive
/// estimates differ by less than `15 * tol` (Richardson criterion), with the
/// tolerance split between halves.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[inline]
fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // below the round-off floor further halving cannot reduce `delta`
    let floor = T::lit(64.0) * T::epsilon() * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol.max(floor) || (m - a).abs() <= T::epsilon() * m.abs() {
        return left + right + delta / T::lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
}

/// Trapezoid rule on a tabulated function with arbitrary (sorted) abscissae.
pub fn trapezoid<T: Real>(xs: &[T], ys: &[T]) -> T {
    debug_assert_eq!(xs.len(), ys.len());
    let half = T::lit(0.5);
    xs.windows(2)
        .zip(ys.windows(2))
        .fold(T::zero(), |acc, (x, y)| acc + (x[1] - x[0]) * (y[0] + y[1]) * half)
}

/// Trapezoid weights for the given sorted abscissae, so that
/// `sum(w[k] * y[k]) == trapezoid(xs, ys)`.
pub fn trapezoid_weights<T: Real>(xs: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    let mut w = vec![T::zero(); xs.len()];
    for k in 1..xs.len() {
        let h = (xs[k] - xs[k - 1]) * half;
        w[k - 1] = w[k - 1] + h;
        w[k] = w[k] + h;
    }
    w
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the `n`-point rule; nodes are found by Newton iteration on `P_n` in `f64`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes mapped to `[a, b]` with matching weights.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> T {
        self.mapped(a, b).fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn composite<F: Fn(T) -> T>(&self, f: F, a: T, b: T, panels: usize) -> T {
        let h = (b - a) / T::from_usize(panels.max(1)).unwrap();
        (0..panels.max(1)).fold(T::zero(), |acc, k| {
            let lo = a + h * T::from_usize(k).unwrap();
            acc + self.integrate(&f, lo, lo + h)
        })
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_integrates_gaussian() {
        let v = adaptive_simpson(|x: f64| (-x * x).exp(), 0.0, 8.0, 1e-12);
        assert_abs_diff_eq!(v, std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn simpson_empty_interval_is_zero() {
        assert_eq!(adaptive_simpson(|x: f64| x, 1.0, 1.0, 1e-9), 0.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::<f64>::new(6);
        // degree 11 is exact for six nodes
        let v = gl.integrate(|x| x.powi(11) + x.powi(10), 0.0, 1.0);
        assert_abs_diff_eq!(v, 1.0 / 12.0 + 1.0 / 11.0, epsilon = 1e-14);
        let w: f64 = gl.mapped(-1.0, 1.0).map(|(_, w)| w).sum();
        assert_abs_diff_eq!(w, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_order_has_center_node() {
        let gl = GaussLegendre::<f64>::new(5);
        let v = gl.composite(|x| x.cos(), 0.0, std::f64::consts::PI, 4);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gl.integrate(|x| x * x, -1.0, 1.0), 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_weights_match_rule() {
        let xs = [0.0, 0.5, 1.5, 2.0];
        let ys = [1.0, 2.0, 0.0, 4.0];
        let w = trapezoid_weights(&xs);
        let direct: f64 = w.iter().zip(&ys).map(|(w, y)| w * y).sum();
        assert_abs_diff_eq!(direct, trapezoid(&xs, &ys), epsilon = 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let gl = GaussLegendre::<f32>::new(8);
        let v = gl.composite(|x| x.exp(), 0.0f32, 1.0, 4);
        assert!((v - (std::f32::consts::E - 1.0)).abs() < 1e-5);
    }
}
