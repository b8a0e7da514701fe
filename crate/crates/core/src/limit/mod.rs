//! The nonlinear limit process: deterministic time-marginals by
//! characteristics, path simulation under a given drift, and the coupling of
//! the particle system with independent copies of the limit process.

mod coupled;
mod density;
mod path;
mod solver;

pub use coupled::{simulate_coupled, CoupledOptions, CoupledSnapshot, CoupledStats};
pub use density::{DensityPart, TransportedDensity};
pub use path::{simulate_nonlinear_path, LimitPath};
pub use solver::{last_jump_expectation, last_jump_normalization, solve_marginals, solve_marginals_with, MarginalSolution, SolverOptions};
