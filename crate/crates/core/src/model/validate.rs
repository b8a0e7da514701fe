//! Grid-based checks of the standing assumptions on the rate function.
//!
//! A pass means "no counterexample on the supplied grid"; nothing here is a
//! symbolic proof.

use crate::error::{Error, Result};
use crate::real::Real;

use super::RateFunction;

const GRID_MAX: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T> {
    /// `f(0) = 0`, `f > 0` on `(0, inf)`, nondecreasing.
    pub a1: bool,
    /// Convex increasing with bounded `f'/f + f''/f'` on `[1, inf)`.
    pub a2: bool,
    /// `f(x + y) <= C (1 + f(x) + f(y))`.
    pub a3: bool,
    /// `limsup f'/f < 1` and `c x^xi <= f <= C (x^{xi-1} + x^zeta)`.
    pub a4: bool,
    /// Empirical sup of `f'/f` on `grid ∩ [1, inf)`; `None` if that set is empty.
    pub sup_f1_over_f: Option<T>,
    /// Empirical sup of `f''/f'` on `grid ∩ [1, inf)`.
    pub sup_f2_over_f1: Option<T>,
    /// Smallest `C` witnessing the subadditivity-type bound on grid pairs.
    pub a3_constant: T,
    /// Witness on the lower half of the grid, used to detect super-polynomial growth.
    pub a3_constant_half: T,
    pub xi: T,
    pub zeta: T,
    /// `min f(x)/x^xi` over positive grid points.
    pub a4_lower: T,
    /// `max f(x)/(x^{xi-1} + x^zeta)` over positive grid points.
    pub a4_upper: T,
    /// `f'/f` at the largest grid point.
    pub tail_f1_over_f: Option<T>,
}

impl<T: Real> ValidationReport<T> {
    pub fn all_pass(&self) -> bool {
        self.a1 && self.a2 && self.a3 && self.a4
    }
}

pub fn validate_assumptions<T: Real>(rate: &RateFunction<T>, grid: &[T]) -> Result<ValidationReport<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("validation grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("validation grid is not sorted".into()));
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(lo >= T::zero()) || !(hi <= T::lit(GRID_MAX)) {
        return Err(Error::InvalidArgument(format!("validation grid must lie in [0, {GRID_MAX}]")));
    }
    let f0 = rate.eval(T::zero());
    if f0 != T::zero() {
        return Err(Error::InvalidRate(format!("f(0) = {f0} != 0")));
    }
    if let Some(x) = grid.iter().find(|&&x| rate.deriv1(x) < T::zero()) {
        return Err(Error::InvalidRate(format!("negative derivative at x = {x}")));
    }

    let positive: Vec<T> = grid.iter().copied().filter(|x| *x > T::zero()).collect();

    let a1 = positive.iter().all(|&x| rate.eval(x) > T::zero())
        && grid.windows(2).all(|w| rate.eval(w[0]) <= rate.eval(w[1]));

    let mut sup_f1_over_f: Option<T> = None;
    let mut sup_f2_over_f1: Option<T> = None;
    for &x in grid.iter().filter(|x| **x >= T::one()) {
        let (f, d1, d2) = (rate.eval(x), rate.deriv1(x), rate.deriv2(x));
        let r1 = d1 / f;
        let r2 = if d1 > T::zero() { d2 / d1 } else { T::infinity() };
        sup_f1_over_f = Some(sup_f1_over_f.map_or(r1, |s| s.max(r1)));
        sup_f2_over_f1 = Some(sup_f2_over_f1.map_or(r2, |s| s.max(r2)));
    }
    let convex = grid.iter().all(|&x| !(rate.deriv2(x) < T::zero()));
    let increasing = positive.iter().all(|&x| rate.deriv1(x) > T::zero());
    let bounded = sup_f1_over_f.map_or(true, |s| s.is_finite()) && sup_f2_over_f1.map_or(true, |s| s.is_finite());
    let a2 = convex && increasing && bounded;

    let ratio = |x: T, y: T| rate.eval(x + y) / (T::one() + rate.eval(x) + rate.eval(y));
    let pair_sup = |pts: &[T]| {
        let mut c = T::zero();
        for (k, &x) in pts.iter().enumerate() {
            for &y in &pts[k..] {
                c = c.max(ratio(x, y));
            }
        }
        c
    };
    let a3_constant = pair_sup(grid);
    let half: Vec<T> = grid.iter().copied().filter(|x| *x <= hi / T::lit(2.0)).collect();
    let a3_constant_half = pair_sup(&half);
    // A growth witness that keeps doubling with the grid range signals super-polynomial f.
    let a3 = a3_constant.is_finite() && a3_constant <= T::lit(2.0) * a3_constant_half.max(T::one());

    let (xi, zeta) = rate.growth_exponents();
    let mut a4_lower = T::infinity();
    let mut a4_upper = T::zero();
    for &x in &positive {
        let f = rate.eval(x);
        a4_lower = a4_lower.min(f / x.powf(xi));
        a4_upper = a4_upper.max(f / (x.powf(xi - T::one()) + x.powf(zeta)));
    }
    let tail_f1_over_f = positive.last().map(|&x| rate.deriv1(x) / rate.eval(x));
    let a4 = xi >= T::one()
        && zeta >= xi - T::one()
        && (positive.is_empty() || (a4_lower > T::zero() && a4_upper.is_finite()))
        && tail_f1_over_f.map_or(true, |r| r < T::one());

    Ok(ValidationReport {
        a1,
        a2,
        a3,
        a4,
        sup_f1_over_f,
        sup_f2_over_f1,
        a3_constant,
        a3_constant_half,
        xi,
        zeta,
        a4_lower,
        a4_upper,
        tail_f1_over_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const GRID: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 10.0];

    #[test]
    fn quadratic_passes_on_sample_grid() {
        let r = validate_assumptions(&RateFunction::quadratic(), &GRID).unwrap();
        assert!(r.a1 && r.a2 && r.a3);
        // f'/f = 2/x, largest at x = 1
        assert_abs_diff_eq!(r.sup_f1_over_f.unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.sup_f2_over_f1.unwrap(), 1.0, epsilon = 1e-15);
        // (x+y)^2 / (1 + x^2 + y^2) at x = y = 10
        assert_abs_diff_eq!(r.a3_constant, 400.0 / 201.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_passes_everything() {
        let r = validate_assumptions(&RateFunction::linear(), &GRID).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert_eq!((r.xi, r.zeta), (1.0, 1.0));
    }

    #[test]
    fn polynomial_passes() {
        let f = RateFunction::polynomial(vec![0.0, 0.5, 0.0, 1.0]).unwrap();
        let grid: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        let r = validate_assumptions(&f, &grid).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert_eq!((r.xi, r.zeta), (1.0, 3.0));
    }

    #[test]
    fn tail_check_depends_on_grid_reach() {
        // f'/f = 2 at x = 1 is not yet in the tail regime
        let r = validate_assumptions(&RateFunction::quadratic(), &[0.0, 0.5, 1.0]).unwrap();
        assert!(!r.a4);
    }

    #[test]
    fn grid_errors() {
        let f = RateFunction::<f64>::linear();
        assert!(validate_assumptions(&f, &[]).is_err());
        assert!(validate_assumptions(&f, &[1.0, 0.0]).is_err());
        assert!(validate_assumptions(&f, &[-1.0, 0.0]).is_err());
        assert!(validate_assumptions(&f, &[0.0, 2e3]).is_err());
    }

    #[test]
    fn single_precision_validation() {
        let r = validate_assumptions(&RateFunction::<f32>::quadratic(), &[0.0f32, 0.5, 1.0, 2.0, 10.0]).unwrap();
        assert!(r.a1 && r.a2 && r.a3);
    }
}
