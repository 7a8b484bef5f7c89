use serde::Serialize;

use super::scheme::ReflectedSolution;
use crate::error::{Error, Result};
use crate::linalg;
use crate::monotone_ops::{ConvexSet, MonotoneOp};

/// Tolerance for the pathwise variational inequalities.
pub const VI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub min_value: f64,
    pub pass: bool,
}

/// Discrete form of `⟨X(t) - a, dK(t) - β dt⟩ >= 0` for a constant graph
/// pair `(a, β)`: the minimum over n of the partial sums
/// `Σ_{j<n} ⟨X_{j+1} - a, ΔK_j - βΔt⟩`. Each increment `ΔK_j` belongs to
/// `Δt·A(X_{j+1})`, so every summand is nonnegative for a correct solution.
pub fn check_vi(
    sol: &ReflectedSolution,
    op: &MonotoneOp,
    a: &[f64],
    beta: &[f64],
) -> Result<InequalityReport> {
    let residual = op.graph_residual(a, beta)?;
    if residual > op.tolerance() {
        return Err(Error::NotInGraph { residual });
    }
    let dt = sol.x.grid.dt();
    let mut partial = 0.0;
    let mut min_value = 0.0f64;
    for n in 0..sol.x.grid.steps {
        let dk = sol.dk(n);
        let lhs = linalg::sub(sol.x.node(n + 1), a);
        let rhs: Vec<f64> = dk.iter().zip(beta).map(|(d, b)| d - b * dt).collect();
        partial += linalg::dot(&lhs, &rhs);
        min_value = min_value.min(partial);
    }
    Ok(InequalityReport {
        min_value,
        pass: min_value >= -VI_TOL,
    })
}

/// Minimum over n of `⟨X_{n+1} - X̃_{n+1}, ΔK_n - ΔK̃_n⟩` for two solutions
/// driven by the same noise.
pub fn check_two_solution_monotonicity(
    s1: &ReflectedSolution,
    s2: &ReflectedSolution,
) -> Result<InequalityReport> {
    if !s1.x.grid.same_as(&s2.x.grid) || s1.x.dim != s2.x.dim {
        return Err(Error::GridMismatch(
            "solutions live on different grids".into(),
        ));
    }
    let min_value = (0..s1.x.grid.steps)
        .map(|n| {
            let dx = linalg::sub(s1.x.node(n + 1), s2.x.node(n + 1));
            let dk = linalg::sub(&s1.dk(n), &s2.dk(n));
            linalg::dot(&dx, &dk)
        })
        .fold(f64::INFINITY, f64::min);
    let min_value = if min_value.is_finite() {
        min_value
    } else {
        0.0
    };
    Ok(InequalityReport {
        min_value,
        pass: min_value >= -VI_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundarySupportReport {
    pub interior_mass: f64,
    pub total_mass: f64,
    pub pass: bool,
}

/// Regulator variation accumulated at nodes farther than `1e-10` from the
/// boundary of `set`; PASS when it is below `1e-8` of the total.
pub fn boundary_support_check(sol: &ReflectedSolution, set: &ConvexSet) -> BoundarySupportReport {
    const NODE_TOL: f64 = 1e-10;
    let mut interior = 0.0;
    let mut total = 0.0;
    for n in 0..sol.x.grid.steps {
        let mass = linalg::norm(&sol.dk(n));
        total += mass;
        if set.boundary_distance(sol.x.node(n + 1)) > NODE_TOL {
            interior += mass;
        }
    }
    BoundarySupportReport {
        interior_mass: interior,
        total_mass: total,
        pass: interior <= 1e-8 * total,
    }
}
