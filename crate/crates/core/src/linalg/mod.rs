//! Sparse storage and the linear solver shared by the fluid system.

mod ilu;
mod solver;
mod sparse;

pub use solver::{LinearSolver, SolverStats};
pub use sparse::{CscMatrix, CsrMatrix};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
