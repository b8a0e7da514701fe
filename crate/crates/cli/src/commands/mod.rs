//! One module per command. Each returns an [`Outcome`](crate::report::Outcome)
//! without touching the filesystem.

pub mod chaos;
pub mod equilibrium;
pub mod invariant;
pub mod simulate;
pub mod solve_limit;

use neuromf::limit::TransportedDensity;

/// Number of uniform cells used for L1/TV comparisons of densities.
pub(crate) const COMPARE_CELLS: usize = 20_000;

/// `lo, lo + h, ..., hi` with `cells` equal steps.
pub(crate) fn uniform_grid(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    (0..=cells).map(|k| lo + (hi - lo) * k as f64 / cells as f64).collect()
}

/// `int |g(t) - reference|` by the trapezoid rule on `[0, right]`, plus atom
/// mass, which the absolutely continuous reference cannot match.
pub(crate) fn l1_to_reference(d: &TransportedDensity, reference: impl Fn(f64) -> f64, right: f64) -> f64 {
    let right = right.max(d.upper());
    let xs = uniform_grid(0.0, right, COMPARE_CELLS);
    let g = d.sample_on(&xs);
    let r: Vec<f64> = xs.iter().map(|x| reference(*x)).collect();
    let tv = neuromf::metrics::tv_densities(&xs, &g, &r).expect("equal lengths");
    2.0 * tv + d.atom_part.iter().map(|a| a.mass).sum::<f64>()
}
