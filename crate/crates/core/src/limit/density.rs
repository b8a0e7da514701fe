use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvBuilder};
use crate::metrics::Cdf;
use crate::quad::GaussLegendre;

/// Which piece of the characteristics representation a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityPart {
    /// Mass that spiked at least once, parametrized by its last spike time.
    Jump,
    /// Mass that never spiked, transported from the initial density.
    Initial,
    /// Transported point masses of the initial law.
    Atom,
}

impl DensityPart {
    pub fn label(self) -> &'static str {
        match self {
            Self::Jump => "jump",
            Self::Initial => "initial",
            Self::Atom => "atom",
        }
    }
}

/// A jump-part sample: born at `birth` at position 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpSample {
    pub birth: f64,
    pub position: f64,
    /// `kappa_{birth,t}(0)`.
    pub survival: f64,
    /// `p_s / a_s e^{lambda (t - s)} kappa_{s,t}(0)`.
    pub density: f64,
}

/// An initial-part sample transported from `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSample {
    pub origin: f64,
    pub position: f64,
    /// `kappa_{0,t}(origin)`.
    pub survival: f64,
    /// Quadrature mass that survived.
    pub mass: f64,
    /// `g0(origin) kappa_{0,t}(origin) e^{lambda t}`.
    pub density: f64,
}

/// A transported atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSample {
    pub origin: f64,
    pub position: f64,
    pub mass: f64,
}

/// The time-`t` marginal in its characteristics form, with a
/// piecewise-linear interpolant of the absolutely continuous part.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedDensity {
    pub time: f64,
    pub a: f64,
    pub p: f64,
    pub m: f64,
    /// `phi_{0,t}(0)`, the splice point between the two parts.
    pub splice: f64,
    /// Total quadrature mass of the representation.
    pub mass: f64,
    /// Ordered by birth time (positions decreasing).
    pub jump_part: Vec<JumpSample>,
    /// Ordered by origin (positions increasing).
    pub initial_part: Vec<InitialSample>,
    pub atom_part: Vec<AtomSample>,
    knots: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TransportedDensity {
    pub(crate) fn new(
        time: f64,
        (a, p, m): (f64, f64, f64),
        splice: f64,
        mass: f64,
        jump_part: Vec<JumpSample>,
        initial_part: Vec<InitialSample>,
        atom_part: Vec<AtomSample>,
    ) -> Self {
        let mut knots = Vec::with_capacity(jump_part.len() + initial_part.len());
        let mut values = Vec::with_capacity(knots.capacity());
        for s in jump_part.iter().rev() {
            knots.push(s.position);
            values.push(s.density);
        }
        for s in &initial_part {
            knots.push(s.position);
            values.push(s.density);
        }
        // round-off can leave adjacent knots marginally out of order
        for k in 1..knots.len() {
            if knots[k] < knots[k - 1] {
                knots[k] = knots[k - 1];
            }
        }
        let mut cumulative = vec![0.0; knots.len()];
        for k in 1..knots.len() {
            cumulative[k] = cumulative[k - 1] + 0.5 * (knots[k] - knots[k - 1]) * (values[k] + values[k - 1]);
        }
        Self { time, a, p, m, splice, mass, jump_part, initial_part, atom_part, knots, values, cumulative }
    }

    /// Density of the absolutely continuous part at `y`: the jump-part
    /// interpolant left of the splice point, the transported initial density
    /// (right-continuous) from it on.
    pub fn density_at(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::InvalidArgument(format!("density evaluated at y = {y} < 0")));
        }
        Ok(self.interpolate(y))
    }

    fn interpolate(&self, y: f64) -> f64 {
        let n = self.knots.len();
        if n == 0 || y < self.knots[0] || y > self.knots[n - 1] {
            return 0.0;
        }
        // rightmost knot <= y, so duplicated splice knots resolve to the right branch
        let k = self.knots.partition_point(|v| *v <= y).saturating_sub(1);
        if k + 1 >= n {
            return self.values[n - 1];
        }
        let (y0, y1) = (self.knots[k], self.knots[k + 1]);
        if y1 <= y0 {
            return self.values[k + 1];
        }
        let w = (y - y0) / (y1 - y0);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// Left limit at the splice point from the jump part, right limit from the initial part.
    pub fn splice_limits(&self) -> (Option<f64>, Option<f64>) {
        let left = self.jump_part.first().map(|s| s.density);
        let right = self.initial_part.first().map(|s| s.density);
        (left, right)
    }

    /// Mass of the piecewise-linear interpolant plus atoms.
    pub fn interpolant_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0) + self.atom_part.iter().map(|a| a.mass).sum::<f64>()
    }

    /// `int phi dg(t)` over the interpolant (4-point Gauss rule per segment) and atoms.
    pub fn expect<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        let gl = GaussLegendre::<f64>::new(4);
        let mut total = 0.0;
        for k in 1..self.knots.len() {
            let (y0, y1) = (self.knots[k - 1], self.knots[k]);
            if y1 <= y0 {
                continue;
            }
            let (v0, v1) = (self.values[k - 1], self.values[k]);
            total += gl.integrate(|y| phi(y) * (v0 + (y - y0) / (y1 - y0) * (v1 - v0)), y0, y1);
        }
        total + self.atom_part.iter().map(|a| a.mass * phi(a.position)).sum::<f64>()
    }

    /// Smallest point above which no mass remains.
    pub fn upper(&self) -> f64 {
        let k = self.knots.last().copied().unwrap_or(0.0);
        self.atom_part.iter().map(|a| a.position).fold(k, f64::max)
    }

    /// Density of the absolutely continuous part sampled on `grid`.
    pub fn sample_on(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|y| if *y < 0.0 { 0.0 } else { self.interpolate(*y) }).collect()
    }

    /// CSV with columns `y,density,part`; atoms report their mass.
    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::new(&["y", "density", "part"]);
        for s in self.jump_part.iter().rev() {
            csv.row([fmt_f64(s.position), fmt_f64(s.density), DensityPart::Jump.label().to_string()]);
        }
        for s in &self.initial_part {
            csv.row([fmt_f64(s.position), fmt_f64(s.density), DensityPart::Initial.label().to_string()]);
        }
        for s in &self.atom_part {
            csv.row([fmt_f64(s.position), fmt_f64(s.mass), DensityPart::Atom.label().to_string()]);
        }
        csv.finish()
    }
}

impl Cdf<f64> for TransportedDensity {
    fn cdf(&self, y: f64) -> f64 {
        let atoms: f64 = self.atom_part.iter().filter(|a| a.position <= y).map(|a| a.mass).sum();
        let n = self.knots.len();
        if n == 0 || y < self.knots[0] {
            return atoms;
        }
        if y >= self.knots[n - 1] {
            return self.cumulative[n - 1] + atoms;
        }
        let k = self.knots.partition_point(|v| *v <= y).saturating_sub(1);
        let (y0, y1) = (self.knots[k], self.knots[k + 1]);
        let h = y - y0;
        let slope = if y1 > y0 { (self.values[k + 1] - self.values[k]) / (y1 - y0) } else { 0.0 };
        self.cumulative[k] + h * self.values[k] + 0.5 * slope * h * h + atoms
    }

    fn lower(&self) -> f64 {
        0.0
    }

    fn upper(&self) -> f64 {
        TransportedDensity::upper(self)
    }
}
