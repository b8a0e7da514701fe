use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

use super::{InitialLaw, RateFunction, RateKind};

/// Numeric tolerances of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub quadrature_abs: f64,
    pub root_abs: f64,
    pub mass_abs: f64,
    /// Time step of the limit-law solver.
    pub dt: f64,
}

impl Tolerances {
    /// Defaults scaled to a horizon: `dt = 1e-3 T`.
    pub fn for_horizon(horizon: f64) -> Self {
        Self { quadrature_abs: 1e-8, root_abs: 1e-10, mass_abs: 1e-4, dt: 1e-3 * horizon }
    }
}

/// Full description of one system: particle count, drift strength, rate,
/// initial law, horizon, seed and tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n: usize,
    pub lambda: f64,
    pub rate: RateFunction,
    pub initial: InitialLaw,
    pub horizon: f64,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl SystemConfig {
    pub fn new(n: usize, lambda: f64, rate: RateFunction, initial: InitialLaw, horizon: f64, seed: u64) -> Result<Self> {
        let cfg = Self { n, lambda, rate, initial, horizon, seed, tolerances: Tolerances::for_horizon(horizon) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Result<Self> {
        self.tolerances = tolerances;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        self.tolerances.dt = dt;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("particle count must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!("horizon must be > 0, got {}", self.horizon)));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("quadrature_abs", t.quadrature_abs),
            ("root_abs", t.root_abs),
            ("mass_abs", t.mass_abs),
            ("dt", t.dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("tolerance {name} must be > 0, got {v}")));
            }
        }
        if t.dt >= self.horizon {
            return Err(Error::InvalidConfig(format!("dt = {} must be below the horizon {}", t.dt, self.horizon)));
        }
        Ok(())
    }
}

/// Serialized form of a rate function: `{"kind": "power", "c": 1, "xi": 2}` or
/// `{"kind": "polynomial", "coefficients": [0, 1, 0.5]}` (constant term first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    Power { c: f64, xi: f64 },
    Polynomial { coefficients: Vec<f64> },
}

impl TryFrom<RateSpec> for RateFunction {
    type Error = Error;

    fn try_from(spec: RateSpec) -> Result<Self> {
        match spec {
            RateSpec::Power { c, xi } => RateFunction::power(c, xi),
            RateSpec::Polynomial { coefficients } => RateFunction::polynomial(coefficients),
        }
    }
}

impl From<&RateFunction> for RateSpec {
    fn from(rate: &RateFunction) -> Self {
        match rate.kind() {
            RateKind::Power { c, xi } => RateSpec::Power { c: *c, xi: *xi },
            RateKind::Polynomial { coefficients } => RateSpec::Polynomial { coefficients: coefficients.clone() },
        }
    }
}

impl Serialize for RateFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RateSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RateFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RateSpec::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

/// Serialized form of an initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    PointMass { x0: f64 },
    Exponential { rate: f64 },
    TruncatedDensity { points: Vec<(f64, f64)>, cutoff: f64 },
}

impl TryFrom<InitialSpec> for InitialLaw {
    type Error = Error;

    fn try_from(spec: InitialSpec) -> Result<Self> {
        match spec {
            InitialSpec::PointMass { x0 } => InitialLaw::point_mass(x0),
            InitialSpec::Exponential { rate } => InitialLaw::exponential(rate),
            InitialSpec::TruncatedDensity { points, cutoff } => InitialLaw::truncated(&points, cutoff),
        }
    }
}

impl From<&InitialLaw> for InitialSpec {
    fn from(law: &InitialLaw) -> Self {
        match law {
            InitialLaw::PointMass { x0 } => InitialSpec::PointMass { x0: *x0 },
            InitialLaw::Exponential { rate } => InitialSpec::Exponential { rate: *rate },
            InitialLaw::TruncatedDensity(d) => InitialSpec::TruncatedDensity {
                points: d.xs().iter().copied().zip(d.values().iter().copied()).collect(),
                cutoff: d.cutoff(),
            },
        }
    }
}
