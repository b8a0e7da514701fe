//! Rate functions, initial laws, configuration and the deterministic
//! characteristics shared by every solver.

mod config;
mod drift;
mod initial;
mod rate;
mod validate;

pub use config::{InitialSpec, RateSpec, SystemConfig, Tolerances};
pub use drift::{flow, survival, CharacteristicFlow, DriftSeries};
pub(crate) use drift::forced_response;
pub use initial::{InitialLaw, Moments, TruncatedDensity};
pub use rate::{RateFunction, RateKind};
pub use validate::{validate_assumptions, ValidationReport};
