use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardUniform};

use crate::error::{Error, Result};
use crate::quad::{trapezoid_weights, GaussLegendre};

use super::RateFunction;

/// Tail mass left out of the solver grid for exponential initial laws.
const EXP_TAIL_MASS: f64 = 1e-13;

/// A piecewise-linear density on `[xs[0], cutoff]`, renormalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDensity {
    xs: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    raw_mass: f64,
}

impl TruncatedDensity {
    /// Builds the law from `(x, g0(x))` samples. Points beyond `cutoff` are
    /// dropped and the remaining trapezoid mass is scaled to one; the mass
    /// before scaling is kept as [`TruncatedDensity::raw_mass`].
    pub fn new(points: &[(f64, f64)], cutoff: f64) -> Result<Self> {
        let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(x, _)| *x <= cutoff).collect();
        if pts.len() < 2 {
            return Err(Error::InvalidInitialLaw("truncated density needs at least two points below the cutoff".into()));
        }
        if pts.iter().any(|(x, g)| !x.is_finite() || !g.is_finite() || *x < 0.0 || *g < 0.0) {
            return Err(Error::InvalidInitialLaw("density samples must be finite, nonnegative, on [0, inf)".into()));
        }
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInitialLaw("density abscissae must be strictly increasing".into()));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let raw: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let raw_mass: f64 = trapezoid_weights(&xs).iter().zip(&raw).map(|(w, g)| w * g).sum();
        if !(raw_mass > 0.0) {
            return Err(Error::InvalidInitialLaw("density has zero mass".into()));
        }
        let density: Vec<f64> = raw.iter().map(|g| g / raw_mass).collect();
        let mut cdf = vec![0.0; xs.len()];
        for k in 1..xs.len() {
            cdf[k] = cdf[k - 1] + 0.5 * (xs[k] - xs[k - 1]) * (density[k] + density[k - 1]);
        }
        Ok(Self { xs, density, cdf, raw_mass })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.density
    }

    /// Trapezoid mass of the samples before renormalization. For samples of a
    /// density normalized on `[0, inf)`, `|1 - raw_mass|` bounds the moment
    /// error introduced by truncation at the cutoff (plus quadrature error).
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn cutoff(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn cell(&self, x: f64) -> Option<usize> {
        if x < self.xs[0] || x > self.cutoff() {
            return None;
        }
        Some(self.xs.partition_point(|v| *v <= x).saturating_sub(1).min(self.xs.len() - 2))
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => 0.0,
            Some(k) => {
                let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
                self.density[k] + t * (self.density[k + 1] - self.density[k])
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.xs[0] {
            return 0.0;
        }
        match self.cell(x) {
            None => 1.0,
            Some(k) => {
                let h = x - self.xs[k];
                let slope = (self.density[k + 1] - self.density[k]) / (self.xs[k + 1] - self.xs[k]);
                self.cdf[k] + h * self.density[k] + 0.5 * slope * h * h
            }
        }
    }

    /// Inverse cdf, solving the quadratic inside the cell.
    pub fn quantile(&self, u: f64) -> f64 {
        let total = *self.cdf.last().unwrap();
        let target = u.clamp(0.0, 1.0) * total;
        let k = self.cdf.partition_point(|c| *c <= target).saturating_sub(1).min(self.xs.len() - 2);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let (d0, d1) = (self.density[k], self.density[k + 1]);
        let r = target - self.cdf[k];
        let slope = (d1 - d0) / (x1 - x0);
        let h = if slope.abs() < 1e-14 {
            if d0 > 0.0 { r / d0 } else { 0.0 }
        } else {
            // 0.5 slope h^2 + d0 h - r = 0, stable root
            let disc = (d0 * d0 + 2.0 * slope * r).max(0.0);
            2.0 * r / (d0 + disc.sqrt()).max(f64::MIN_POSITIVE)
        };
        (x0 + h).clamp(x0, x1)
    }
}

/// Law of the i.i.d. initial potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    PointMass { x0: f64 },
    Exponential { rate: f64 },
    TruncatedDensity(TruncatedDensity),
}

/// `E[Y0]`, `E[f(Y0)]`, `E[f(Y0)^2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub mean_f: f64,
    pub mean_f2: f64,
}

impl InitialLaw {
    pub fn point_mass(x0: f64) -> Result<Self> {
        if !(x0 >= 0.0) || !x0.is_finite() {
            return Err(Error::InvalidInitialLaw(format!("point mass location must be >= 0, got {x0}")));
        }
        Ok(Self::PointMass { x0 })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidInitialLaw(format!("exponential rate must be > 0, got {rate}")));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn truncated(points: &[(f64, f64)], cutoff: f64) -> Result<Self> {
        TruncatedDensity::new(points, cutoff).map(Self::TruncatedDensity)
    }

    /// `P(Y0 = 0) = 1`.
    pub fn is_dirac_zero(&self) -> bool {
        matches!(self, Self::PointMass { x0 } if *x0 == 0.0)
    }

    /// Density, when the law is absolutely continuous.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Self::PointMass { .. } => None,
            Self::Exponential { rate } => Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            Self::TruncatedDensity(d) => Some(d.density(x)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::PointMass { x0 } => f64::from(u8::from(x >= *x0)),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::TruncatedDensity(d) => d.cdf(x),
        }
    }

    /// Point beyond which the law carries (numerically) no mass.
    pub fn support_hint(&self) -> f64 {
        match self {
            Self::PointMass { x0 } => *x0,
            Self::Exponential { rate } => -EXP_TAIL_MASS.ln() / rate,
            Self::TruncatedDensity(d) => d.cutoff(),
        }
    }

    /// `E[h(Y0)]` by quadrature (exact for point masses).
    pub fn expect<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        let gl = GaussLegendre::<f64>::new(8);
        match self {
            Self::PointMass { x0 } => h(*x0),
            Self::Exponential { rate } => {
                // integrate in u = rate x up to the point where e^{-u} underflows against h's growth
                let upper = 60.0 / rate;
                gl.composite(|x| h(x) * rate * (-rate * x).exp(), 0.0, upper, 600)
            }
            Self::TruncatedDensity(d) => d
                .xs
                .windows(2)
                .map(|w| gl.integrate(|x| h(x) * d.density(x), w[0], w[1]))
                .sum(),
        }
    }

    pub fn moments(&self, rate: &RateFunction) -> Result<Moments> {
        let m = Moments {
            mean: self.expect(|x| x),
            mean_f: self.expect(|x| rate.eval(x)),
            mean_f2: self.expect(|x| rate.eval(x).powi(2)),
        };
        if m.mean.is_finite() && m.mean_f.is_finite() && m.mean_f2.is_finite() {
            Ok(m)
        } else {
            Err(Error::NonFinite("initial-law moments".into()))
        }
    }

    /// Quadrature nodes `(x_k, g0(x_k))` for absolutely continuous laws,
    /// on a grid with at least `min_nodes` points.
    pub fn density_nodes(&self, min_nodes: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::PointMass { .. } => None,
            Self::Exponential { rate } => {
                let n = min_nodes.max(2);
                let upper = self.support_hint();
                let xs: Vec<f64> = (0..n).map(|k| upper * k as f64 / (n - 1) as f64).collect();
                let gs = xs.iter().map(|x| rate * (-rate * x).exp()).collect();
                Some((xs, gs))
            }
            Self::TruncatedDensity(d) => {
                let cells = d.xs.len() - 1;
                let refine = min_nodes.div_ceil(cells).max(1);
                let mut xs = Vec::with_capacity(cells * refine + 1);
                for w in d.xs.windows(2) {
                    for j in 0..refine {
                        xs.push(w[0] + (w[1] - w[0]) * j as f64 / refine as f64);
                    }
                }
                xs.push(d.cutoff());
                let gs = xs.iter().map(|x| d.density(*x)).collect();
                Some((xs, gs))
            }
        }
    }
}

impl Distribution<f64> for InitialLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::PointMass { x0 } => *x0,
            Self::Exponential { rate } => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            Self::TruncatedDensity(d) => {
                let u: f64 = rng.sample(StandardUniform);
                d.quantile(u)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_moments() {
        let law = InitialLaw::exponential(2.0).unwrap();
        let m = law.moments(&RateFunction::quadratic()).unwrap();
        assert_abs_diff_eq!(m.mean, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.mean_f, 0.5, epsilon = 1e-12); // E[Y^2] = 2/rate^2
        assert_abs_diff_eq!(m.mean_f2, 24.0 / 16.0, epsilon = 1e-10); // E[Y^4] = 24/rate^4
    }

    #[test]
    fn truncated_density_normalizes_and_inverts() {
        let pts: Vec<(f64, f64)> = (0..=200).map(|k| {
            let x = k as f64 * 0.05;
            (x, (-x).exp())
        }).collect();
        let law = TruncatedDensity::new(&pts, 8.0).unwrap();
        assert!((law.raw_mass() - 1.0).abs() < 2e-3);
        assert_abs_diff_eq!(law.cdf(law.cutoff()), 1.0, epsilon = 1e-12);
        for u in [0.0, 0.1, 0.5, 0.9, 0.999] {
            assert_abs_diff_eq!(law.cdf(law.quantile(u)), u, epsilon = 1e-10);
        }
        let wrapped = InitialLaw::TruncatedDensity(law);
        assert_abs_diff_eq!(wrapped.expect(|_| 1.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncated_density_errors() {
        assert!(TruncatedDensity::new(&[(0.0, 1.0)], 1.0).is_err());
        assert!(TruncatedDensity::new(&[(0.0, 1.0), (0.0, 1.0)], 1.0).is_err());
        assert!(TruncatedDensity::new(&[(0.0, -1.0), (1.0, 1.0)], 1.0).is_err());
        assert!(TruncatedDensity::new(&[(0.0, 0.0), (1.0, 0.0)], 1.0).is_err());
    }

    #[test]
    fn point_mass_and_errors() {
        let law = InitialLaw::point_mass(1.5).unwrap();
        let mut rng = StreamKey::new(1, "t").rng();
        assert_eq!(law.sample(&mut rng), 1.5);
        assert_eq!(law.density(1.0), None);
        assert!(InitialLaw::point_mass(-1.0).is_err());
        assert!(InitialLaw::exponential(0.0).is_err());
        assert!(InitialLaw::point_mass(0.0).unwrap().is_dirac_zero());
    }

    #[test]
    fn solver_nodes_cover_support() {
        let law = InitialLaw::exponential(1.0).unwrap();
        let (xs, gs) = law.density_nodes(1000).unwrap();
        assert_eq!(xs.len(), 1000);
        assert_eq!(xs[0], 0.0);
        assert_abs_diff_eq!(gs[0], 1.0);
        let mass: f64 = trapezoid_weights(&xs).iter().zip(&gs).map(|(w, g)| w * g).sum();
        assert!((mass - 1.0).abs() < 1e-3);
    }
}
