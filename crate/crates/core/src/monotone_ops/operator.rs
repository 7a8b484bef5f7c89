use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::convex_set::ConvexSet;
use super::graph1d::MonotoneGraph1D;
use crate::error::{Error, Result};
use crate::linalg;

/// Residual tolerance for kinds with closed-form resolvents.
pub const EXACT_TOL: f64 = 1e-10;
/// Residual tolerance for kinds whose resolvent is computed iteratively.
pub const ITERATIVE_TOL: f64 = 1e-8;

const SUM_FIXED_POINT_MAX_ITER: usize = 100;
const SUM_SPLITTING_MAX_ITER: usize = 20_000;
const SUM_STEP_TOL: f64 = 1e-12;

/// A proper convex lower semicontinuous function with a closed-form prox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProxFunction {
    /// `c/2 · |x|²`, `c >= 0`.
    SquaredNorm { c: f64 },
    /// `weight · Σ|x_i|`.
    L1 { weight: f64 },
    /// `weight · |x|`.
    Euclidean { weight: f64 },
    /// Indicator of a closed convex set.
    Indicator { set: ConvexSet },
}

impl ProxFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ProxFunction::SquaredNorm { c } => 0.5 * c * linalg::dot(x, x),
            ProxFunction::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxFunction::Euclidean { weight } => weight * linalg::norm(x),
            ProxFunction::Indicator { set } => {
                if set.contains(x, EXACT_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `argmin_y f(y) + |y - x|² / (2α)`.
    pub fn prox(&self, alpha: f64, x: &[f64]) -> Vec<f64> {
        match self {
            ProxFunction::SquaredNorm { c } => linalg::scale(x, 1.0 / (1.0 + alpha * c)),
            ProxFunction::L1 { weight } => {
                let t = alpha * weight;
                x.iter()
                    .map(|v| v.signum() * (v.abs() - t).max(0.0))
                    .collect()
            }
            ProxFunction::Euclidean { weight } => {
                let n = linalg::norm(x);
                let t = alpha * weight;
                if n <= t {
                    vec![0.0; x.len()]
                } else {
                    linalg::scale(x, 1.0 - t / n)
                }
            }
            ProxFunction::Indicator { set } => set.project(x),
        }
    }

    fn domain_closure(&self) -> Option<ConvexSet> {
        match self {
            ProxFunction::Indicator { set } => Some(set.clone()),
            _ => None,
        }
    }
}

/// A maximal monotone operator, represented through its resolvent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonotoneOp {
    /// The zero operator on ℝ^m.
    Zero,
    /// Normal cone ∂I_C of a closed convex set.
    Indicator { set: ConvexSet },
    /// Subdifferential ∂f of a proximable convex function.
    Subdifferential { function: ProxFunction },
    /// A maximal monotone graph on ℝ.
    Graph1d { graph: MonotoneGraph1D },
    /// `y ↦ M y` with `⟨My, y⟩ >= 0`; rows of `M`.
    Linear { matrix: Vec<Vec<f64>> },
    /// `y ↦ gain · A(dilation · y)` with `gain, dilation > 0`.
    Scaled {
        op: Box<MonotoneOp>,
        gain: f64,
        dilation: f64,
    },
    /// `A + B` where at least one summand is single-valued and Lipschitz.
    Sum {
        first: Box<MonotoneOp>,
        second: Box<MonotoneOp>,
    },
}

impl MonotoneOp {
    /// ∂I_{ℝ₊} acting on the first coordinate.
    pub fn halfspace() -> Self {
        MonotoneOp::Indicator {
            set: ConvexSet::nonnegative(),
        }
    }

    pub fn linear_scalar(c: f64) -> Self {
        MonotoneOp::Linear {
            matrix: vec![vec![c]],
        }
    }

    pub fn sum(first: MonotoneOp, second: MonotoneOp) -> Self {
        MonotoneOp::Sum {
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    pub fn scaled(op: MonotoneOp, gain: f64, dilation: f64) -> Self {
        MonotoneOp::Scaled {
            op: Box::new(op),
            gain,
            dilation,
        }
    }

    /// Residual tolerance of `resolvent` for this kind.
    pub fn tolerance(&self) -> f64 {
        match self {
            MonotoneOp::Sum { .. } => ITERATIVE_TOL,
            MonotoneOp::Indicator {
                set: ConvexSet::Intersection { .. },
            } => ITERATIVE_TOL,
            MonotoneOp::Scaled { op, .. } => op.tolerance(),
            _ => EXACT_TOL,
        }
    }

    /// `J_α(x) = (1 + αA)⁻¹(x)`.
    pub fn resolvent(&self, alpha: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "resolvent needs alpha > 0, got {alpha}"
            )));
        }
        match self {
            MonotoneOp::Zero => Ok(x.to_vec()),
            MonotoneOp::Indicator { set } => Ok(set.project(x)),
            MonotoneOp::Subdifferential { function } => Ok(function.prox(alpha, x)),
            MonotoneOp::Graph1d { graph } => {
                if x.len() != 1 {
                    return Err(Error::NoResolvent(format!(
                        "1-D graph applied to a point of dimension {}",
                        x.len()
                    )));
                }
                Ok(vec![graph.solve(alpha, x[0])?.0])
            }
            MonotoneOp::Linear { matrix } => linear_resolvent(matrix, alpha, x),
            MonotoneOp::Scaled { op, gain, dilation } => {
                let inner = linalg::scale(x, *dilation);
                let z = op.resolvent(alpha * gain * dilation, &inner)?;
                Ok(linalg::scale(&z, 1.0 / dilation))
            }
            MonotoneOp::Sum { first, second } => sum_resolvent(first, second, alpha, x),
        }
    }

    /// `A^α(x) = (x - J_α(x)) / α`.
    pub fn yosida(&self, alpha: f64, x: &[f64]) -> Result<Vec<f64>> {
        let j = self.resolvent(alpha, x)?;
        Ok(x.iter().zip(&j).map(|(a, b)| (a - b) / alpha).collect())
    }

    /// Distance of `(y, v)` from the graph, measured as `|J_1(y + v) - y|`.
    /// Zero exactly when `v ∈ A(y)`.
    pub fn graph_residual(&self, y: &[f64], v: &[f64]) -> Result<f64> {
        let shifted: Vec<f64> = y.iter().zip(v).map(|(a, b)| a + b).collect();
        let j = self.resolvent(1.0, &shifted)?;
        Ok(linalg::dist(&j, y))
    }

    /// Closure of D(A); `None` means all of ℝ^m.
    pub fn domain_closure(&self) -> Option<ConvexSet> {
        match self {
            MonotoneOp::Zero | MonotoneOp::Linear { .. } => None,
            MonotoneOp::Indicator { set } => Some(set.clone()),
            MonotoneOp::Subdifferential { function } => function.domain_closure(),
            MonotoneOp::Graph1d { graph } => {
                let (lo, hi) = graph.domain_bounds();
                if lo.is_infinite() && hi.is_infinite() {
                    None
                } else {
                    Some(ConvexSet::Box {
                        lo: vec![lo],
                        hi: vec![hi],
                    })
                }
            }
            MonotoneOp::Scaled { op, dilation, .. } => {
                op.domain_closure().map(|s| s.dilate_inverse(*dilation))
            }
            MonotoneOp::Sum { first, second } => {
                match (first.domain_closure(), second.domain_closure()) {
                    (None, None) => None,
                    (Some(s), None) | (None, Some(s)) => Some(s),
                    (Some(a), Some(b)) => Some(ConvexSet::Intersection { sets: vec![a, b] }),
                }
            }
        }
    }

    /// Euclidean distance from `x` to the closure of D(A).
    pub fn domain_distance(&self, x: &[f64]) -> f64 {
        self.domain_closure().map_or(0.0, |s| s.distance(x))
    }

    /// Lipschitz constant when the operator is single-valued on all of ℝ^m.
    pub fn single_valued_lipschitz(&self) -> Option<f64> {
        match self {
            MonotoneOp::Zero => Some(0.0),
            MonotoneOp::Linear { matrix } => {
                Some(matrix.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
            }
            MonotoneOp::Subdifferential {
                function: ProxFunction::SquaredNorm { c },
            } => Some(*c),
            MonotoneOp::Scaled { op, gain, dilation } => {
                op.single_valued_lipschitz().map(|l| l * gain * dilation)
            }
            MonotoneOp::Sum { first, second } => {
                Some(first.single_valued_lipschitz()? + second.single_valued_lipschitz()?)
            }
            _ => None,
        }
    }

    /// Evaluates a single-valued operator; `None` for multivalued kinds.
    pub fn apply_single(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            MonotoneOp::Zero => Some(vec![0.0; x.len()]),
            MonotoneOp::Linear { matrix } => {
                let n = matrix.len();
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                Some(linalg::matvec(&flat, n, x.len(), x))
            }
            MonotoneOp::Subdifferential {
                function: ProxFunction::SquaredNorm { c },
            } => Some(linalg::scale(x, *c)),
            MonotoneOp::Scaled { op, gain, dilation } => {
                let v = op.apply_single(&linalg::scale(x, *dilation))?;
                Some(linalg::scale(&v, *gain))
            }
            MonotoneOp::Sum { first, second } => {
                let a = first.apply_single(x)?;
                let b = second.apply_single(x)?;
                Some(a.iter().zip(&b).map(|(p, q)| p + q).collect())
            }
            _ => None,
        }
    }

    /// Kinds admitted for ℝ₊-type reflection shortcuts: ∂I of a half-space.
    pub fn halfspace_axis(&self) -> Option<usize> {
        match self {
            MonotoneOp::Indicator {
                set: ConvexSet::HalfSpace { axis },
            } => Some(*axis),
            MonotoneOp::Scaled { op, .. } => op.halfspace_axis(),
            _ => None,
        }
    }
}

fn linear_resolvent(matrix: &[Vec<f64>], alpha: f64, x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
        return Err(Error::NoResolvent(format!(
            "linear operator shape does not match dimension {n}"
        )));
    }
    if n == 1 {
        return Ok(vec![x[0] / (1.0 + alpha * matrix[0][0])]);
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id + alpha * matrix[i][j]
    });
    let rhs = DVector::from_column_slice(x);
    m.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::NoResolvent("1 + αM is singular".into()))
}

/// Resolvent of `A + B` with `B` single-valued and L-Lipschitz: the
/// fixed-point map `y ↦ J^A_α(x - αB(y))` when `αL < 1`, otherwise
/// forward-backward splitting on `y ↦ (y + αB(y) - x)/α + A(y)`.
fn sum_resolvent(
    first: &MonotoneOp,
    second: &MonotoneOp,
    alpha: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let (set_valued, single, lip) = match (
        first.single_valued_lipschitz(),
        second.single_valued_lipschitz(),
    ) {
        (_, Some(l)) => (first, second, l),
        (Some(l), None) => (second, first, l),
        (None, None) => {
            return Err(Error::NoResolvent(
                "sum of two multivalued operators has no computable resolvent".into(),
            ))
        }
    };
    let eval = |y: &[f64]| {
        single
            .apply_single(y)
            .expect("single-valued by construction")
    };

    let mut y = set_valued.resolvent(alpha, x)?;
    if alpha * lip < 1.0 {
        for _ in 0..SUM_FIXED_POINT_MAX_ITER {
            let by = eval(&y);
            let arg: Vec<f64> = x.iter().zip(&by).map(|(xi, bi)| xi - alpha * bi).collect();
            let next = set_valued.resolvent(alpha, &arg)?;
            let step = linalg::dist(&next, &y);
            y = next;
            if step < SUM_STEP_TOL {
                return Ok(y);
            }
        }
    }
    {
        // Tseng splitting on 0 ∈ αA(y) + G(y), G(y) = y - x + αB(y), which is
        // 1-strongly monotone and (1 + αL)-Lipschitz; B need not be cocoercive.
        let lambda = 0.9 / (1.0 + alpha * lip);
        let g = |y: &[f64]| -> Vec<f64> {
            let by = eval(y);
            y.iter()
                .zip(&by)
                .zip(x)
                .map(|((yi, bi), xi)| yi - xi + alpha * bi)
                .collect()
        };
        for _ in 0..SUM_SPLITTING_MAX_ITER {
            let gy = g(&y);
            let arg: Vec<f64> = y.iter().zip(&gy).map(|(yi, gi)| yi - lambda * gi).collect();
            let z = set_valued.resolvent(lambda * alpha, &arg)?;
            let step = linalg::dist(&z, &y);
            if step < SUM_STEP_TOL {
                y = z;
                break;
            }
            let gz = g(&z);
            y = z
                .iter()
                .zip(&gz)
                .zip(&gy)
                .map(|((zi, a), b)| zi - lambda * (a - b))
                .collect();
        }
        y = set_valued.resolvent(
            lambda * alpha,
            &y.iter()
                .zip(g(&y))
                .map(|(yi, gi)| yi - lambda * gi)
                .collect::<Vec<_>>(),
        )?;
    }
    // accept if the inclusion residual is within the iterative tolerance
    let by = eval(&y);
    let v: Vec<f64> = x
        .iter()
        .zip(&y)
        .zip(&by)
        .map(|((xi, yi), bi)| (xi - yi) / alpha - bi)
        .collect();
    let residual = set_valued.graph_residual(&y, &v)?;
    if residual <= ITERATIVE_TOL {
        Ok(y)
    } else {
        Err(Error::NoResolvent(format!(
            "sum resolvent did not converge (residual {residual:.3e})"
        )))
    }
}
