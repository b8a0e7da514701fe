//! JSON experiment configs. Every file carries a top-level `"command"` tag;
//! the remaining fields depend on the command.

use std::path::Path;

use neuromf::invariant::solve_a_star;
use neuromf::model::{InitialLaw, InitialSpec, RateFunction, RateSpec, SystemConfig, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment, keyed by the `command` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Simulate(SimulateConfig),
    Invariant(InvariantConfig),
    SolveLimit(SolveLimitConfig),
    Chaos(ChaosConfig),
    Equilibrium(EquilibriumConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Simulate(_) => "simulate",
            ExperimentConfig::Invariant(_) => "invariant",
            ExperimentConfig::SolveLimit(_) => "solve-limit",
            ExperimentConfig::Chaos(_) => "chaos",
            ExperimentConfig::Equilibrium(_) => "equilibrium",
        }
    }

    /// Replaces the master seed wherever the command has one.
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Simulate(c) => c.system.seed = seed,
            ExperimentConfig::SolveLimit(c) => c.system.seed = seed,
            ExperimentConfig::Chaos(c) => c.system.seed = seed,
            ExperimentConfig::Equilibrium(c) => c.system.seed = seed,
            ExperimentConfig::Invariant(_) => {}
        }
    }

    /// Master seed, `0` for deterministic commands.
    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Simulate(c) => c.system.seed,
            ExperimentConfig::SolveLimit(c) => c.system.seed,
            ExperimentConfig::Chaos(c) => c.system.seed,
            ExperimentConfig::Equilibrium(c) => c.system.seed,
            ExperimentConfig::Invariant(_) => 0,
        }
    }
}

/// Partial override of the default tolerances of a horizon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl ToleranceSection {
    pub fn resolve(&self, horizon: f64) -> Tolerances {
        let d = Tolerances::for_horizon(horizon);
        Tolerances {
            quadrature_abs: self.quadrature_abs.unwrap_or(d.quadrature_abs),
            root_abs: self.root_abs.unwrap_or(d.root_abs),
            mass_abs: self.mass_abs.unwrap_or(d.mass_abs),
            dt: self.dt.unwrap_or(d.dt),
        }
    }
}

/// Initial law as written in a config. Besides the library laws, `invariant`
/// starts from the tabulated invariant density of the configured system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    PointMass { x0: f64 },
    Exponential { rate: f64 },
    TruncatedDensity { points: Vec<(f64, f64)>, cutoff: f64 },
    Invariant {
        #[serde(default = "default_invariant_points")]
        points: usize,
    },
}

fn default_invariant_points() -> usize {
    4001
}

fn default_n() -> usize {
    1
}

/// The system block shared by the stochastic and limit-law commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default = "default_n")]
    pub n: usize,
    pub lambda: f64,
    pub rate: RateSpec,
    pub initial: InitialSection,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

impl SystemSection {
    pub fn rate(&self) -> Result<RateFunction, CliError> {
        Ok(RateFunction::try_from(self.rate.clone())?)
    }

    pub fn build(&self) -> Result<SystemConfig, CliError> {
        let rate = self.rate()?;
        let tolerances = self.tolerances.resolve(self.horizon);
        let initial = match &self.initial {
            InitialSection::PointMass { x0 } => InitialLaw::try_from(InitialSpec::PointMass { x0: *x0 })?,
            InitialSection::Exponential { rate } => InitialLaw::try_from(InitialSpec::Exponential { rate: *rate })?,
            InitialSection::TruncatedDensity { points, cutoff } => {
                InitialLaw::try_from(InitialSpec::TruncatedDensity { points: points.clone(), cutoff: *cutoff })?
            }
            InitialSection::Invariant { points } => {
                if *points < 2 {
                    return Err(CliError::config("invariant initial law needs at least 2 points"));
                }
                solve_a_star(self.lambda, &rate, tolerances.root_abs)?.to_initial_law(*points)?
            }
        };
        let cfg = SystemConfig::new(self.n, self.lambda, rate, initial, self.horizon, self.seed)?;
        Ok(cfg.with_tolerances(tolerances)?)
    }
}

/// Sorted, finite, within `[0, horizon]`.
pub(crate) fn check_times(times: &[f64], horizon: f64, what: &str) -> Result<(), CliError> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > horizon) {
        return Err(CliError::config(format!("{what} must lie in [0, {horizon}]")));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "one_u64")]
    pub replicates: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_budget: Option<u64>,
    /// Also write the accepted events of every replicate.
    #[serde(default)]
    pub write_events: bool,
}

fn one_u64() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantConfig {
    pub lambda: f64,
    pub rate: RateSpec,
    #[serde(default = "default_root_abs")]
    pub root_abs: f64,
    #[serde(default = "default_density_points")]
    pub density_points: usize,
}

fn default_root_abs() -> f64 {
    1e-10
}

fn default_density_points() -> usize {
    2001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveLimitConfig {
    pub system: SystemSection,
    pub snapshot_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrector_passes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosConfig {
    /// `n` is ignored; the particle counts come from `n_grid`.
    pub system: SystemSection,
    pub n_grid: Vec<usize>,
    pub replicates: u64,
    /// Defaults to eight equally spaced times ending at the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default = "default_windows")]
    pub windows: usize,
    #[serde(default = "default_slope_band")]
    pub slope_band: (f64, f64),
    #[serde(default = "default_min_r_squared")]
    pub min_r_squared: f64,
}

fn default_windows() -> usize {
    256
}

fn default_slope_band() -> (f64, f64) {
    (-0.65, -0.35)
}

fn default_min_r_squared() -> f64 {
    0.9
}

/// Optional particle cross-check of the non-extinction path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleCheck {
    pub n: usize,
    /// Half-width of the band in standard errors.
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
}

fn default_sigmas() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub system: SystemSection,
    /// Spacing of the uniform time grid `step, 2 step, ..., T`.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Start of the window on which monotonicity and floors are checked.
    #[serde(default = "one_f64")]
    pub check_from: f64,
    /// Upper bound on the final TV distance (`lambda = 0`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_tv_max: Option<f64>,
    /// Exponent of the `(1+t)^{-1/xi}` decay check; defaults to the power of a power rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_xi: Option<f64>,
    #[serde(default = "default_decay_factor")]
    pub decay_factor: f64,
    /// Positive floor for `inf_t a_t` (`lambda > 0`).
    #[serde(default = "default_floor")]
    pub a_floor: f64,
    /// Positive floor for `inf_t m_t` (`lambda > 0`).
    #[serde(default = "default_floor")]
    pub m_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle_check: Option<ParticleCheck>,
}

fn default_grid_step() -> f64 {
    0.5
}

fn one_f64() -> f64 {
    1.0
}

fn default_decay_factor() -> f64 {
    1.5
}

fn default_floor() -> f64 {
    0.01
}
