//! Shared fixtures for the benchmarks: deterministic problem instances sized
//! so a single step fits comfortably in cache but still exercises the dense
//! kernels.

use saddlekit::problems::{difference_matrix, seeded_lasso, seeded_quadratic_saddle};
use saddlekit::{SaddleProblem, Vector};

/// Fused-lasso style instance: least-squares data term, `l1` on pairwise
/// differences.
pub fn fused_lasso(dim: usize) -> SaddleProblem {
    let coupling = difference_matrix(dim).expect("dim >= 2");
    seeded_lasso(dim + dim / 2, dim, 0.3, coupling, 0xbe9c).expect("valid fixture")
}

/// Smooth problem for the ODE benchmarks.
pub fn quadratic_saddle(dim: usize) -> SaddleProblem {
    seeded_quadratic_saddle(dim, dim, 0xbe9c).expect("valid fixture")
}

/// Deterministic, mildly structured starting point.
pub fn start(dim: usize) -> Vector {
    Vector::new((0..dim).map(|i| ((i as f64) * 0.37).sin()).collect()).expect("dim >= 1")
}
