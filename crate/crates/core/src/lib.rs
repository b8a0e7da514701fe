//! Exact simulation and numerical analysis of the mean-field interacting-neuron
//! model: `N` neurons with potentials `X^i`, each spiking at rate `f(X^i)`,
//! reset to zero on a spike while every other neuron receives `1/N`, plus an
//! electrical drift `-lambda (X^i - mean)`.
//!
//! The crate is organized by role:
//!
//! * [`model`]: rate functions, initial laws, system configuration, drift series,
//!   the deterministic flow and the survival kernel.
//! * [`particle`]: event-driven exact simulation of the `N`-particle system.
//! * [`limit`]: characteristics solver for the time-marginals of the nonlinear
//!   limit process, path simulation of that process and the particle/limit coupling.
//! * [`invariant`]: the non-trivial invariant density and its scalar equation.
//! * [`metrics`]: Wasserstein-1, total variation, the `H`-distance and log-log fits.
//!
//! Numeric kernels that do not touch random streams are generic over [`Real`];
//! the aliases below pin the common instantiations.

pub mod error;
pub mod invariant;
pub mod io;
pub mod limit;
pub mod metrics;
pub mod model;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod particle;
pub mod quad;
pub mod real;
pub mod rng;

pub use error::{Error, Result};
pub use real::Real;

/// Rate function over `f64`.
pub type RateFunction64 = model::RateFunction<f64>;
/// Rate function over `f32`.
pub type RateFunction32 = model::RateFunction<f32>;
/// Invariant measure computed in `f64`.
pub type InvariantResult64 = invariant::InvariantResult<f64>;
/// Invariant measure computed in `f32`.
pub type InvariantResult32 = invariant::InvariantResult<f32>;
/// Log-log fit in `f64`.
pub type RateFit64 = metrics::RateFit<f64>;
