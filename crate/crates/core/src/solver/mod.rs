//! Time-stepping for the multivalued equation.
//!
//! The main scheme treats the monotone term implicitly through its
//! resolvent, which keeps every iterate in the closure of D(A) and, for
//! indicators, reproduces the discrete Skorohod recursion exactly. The
//! regulator increment is `ΔK_n = Y_n - X_{n+1}` where `Y_n` is the free
//! Euler predictor.

mod checks;
mod model;
mod reflection;
mod scheme;

pub use checks::{
    boundary_support_check, check_two_solution_monotonicity, check_vi, BoundarySupportReport,
    InequalityReport, VI_TOL,
};
pub use model::{Diffusion, Drift, ModelSpec};
pub use reflection::{reflect_halfspace, skorohod_map};
pub use scheme::{
    simulate, simulate_with, simulate_yosida, Noise, ReflectedSolution, Scheme, SkeletonEvaluator,
};
