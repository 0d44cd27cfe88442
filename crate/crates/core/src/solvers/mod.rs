//! Numerical building blocks: scalar search, a log-barrier interior-point
//! method, the convex–concave procedure and non-negative least squares.

mod barrier;
mod cccp;
mod golden;
mod nnls;

pub use barrier::{concave_max_linear, BarrierOptions, BarrierSolution, ConcaveObjective, LinearConstraints, Row};
pub use cccp::{cccp_solve, kkt_residual, CccpOptions, CccpSolution, DcProblem};
pub use golden::{golden_section_max, ScalarOptimum, ScalarProblem};
pub use nnls::nnls;

/// Central-difference gradient, for checking analytic derivatives.
pub fn numeric_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + h;
            let up = f(&y);
            y[j] = x[j] - h;
            let down = f(&y);
            y[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}
