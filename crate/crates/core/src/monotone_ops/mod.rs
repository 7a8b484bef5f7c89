//! Maximal monotone operators and their resolvent calculus.
//!
//! Every operator exposes a resolvent `J_α = (1 + αA)⁻¹`; Yosida
//! approximations, minimal sections and Moreau envelopes are all derived
//! from it. Closed-form kinds are exact to [`EXACT_TOL`], iterative kinds
//! (sums, intersections of sets) to [`ITERATIVE_TOL`].

mod convex_set;
mod graph1d;
mod operator;
mod validate;

use std::sync::Arc;

pub use convex_set::ConvexSet;
pub use graph1d::MonotoneGraph1D;
pub use operator::{MonotoneOp, ProxFunction, EXACT_TOL, ITERATIVE_TOL};
pub use validate::{property_suite, PropertyReport};

use crate::error::{Error, Result};
use crate::linalg;

/// α-schedule used to resolve the minimal section.
pub const MINIMAL_SECTION_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Agreement required between the linear and quadratic extrapolants.
pub const MINIMAL_SECTION_TOL: f64 = 1e-6;

pub fn resolvent(op: &MonotoneOp, alpha: f64, x: &[f64]) -> Result<Vec<f64>> {
    op.resolvent(alpha, x)
}

pub fn yosida(op: &MonotoneOp, alpha: f64, x: &[f64]) -> Result<Vec<f64>> {
    op.yosida(alpha, x)
}

/// Minimal-norm element `A⁰(x) = lim_{α↓0} A^α(x)`.
///
/// The Yosida values along [`MINIMAL_SECTION_SCHEDULE`] are extrapolated to
/// α = 0 (quadratic through all three points); the linear extrapolant of
/// the last two must agree with it to [`MINIMAL_SECTION_TOL`].
pub fn minimal_section(op: &MonotoneOp, x: &[f64]) -> Result<Vec<f64>> {
    let distance = op.domain_distance(x);
    if distance > EXACT_TOL {
        return Err(Error::OutsideDomain { distance });
    }
    let [a1, a2, a3] = MINIMAL_SECTION_SCHEDULE;
    let v1 = op.yosida(a1, x)?;
    let v2 = op.yosida(a2, x)?;
    let v3 = op.yosida(a3, x)?;
    // Lagrange weights for evaluating the interpolant at α = 0
    let w1 = a2 * a3 / ((a1 - a2) * (a1 - a3));
    let w2 = a1 * a3 / ((a2 - a1) * (a2 - a3));
    let w3 = a1 * a2 / ((a3 - a1) * (a3 - a2));
    let quad: Vec<f64> = (0..x.len())
        .map(|i| w1 * v1[i] + w2 * v2[i] + w3 * v3[i])
        .collect();
    let lin: Vec<f64> = (0..x.len())
        .map(|i| (a2 * v3[i] - a3 * v2[i]) / (a2 - a3))
        .collect();
    let spread = linalg::dist(&quad, &lin);
    if spread > MINIMAL_SECTION_TOL * linalg::norm(&quad).max(1.0) {
        return Err(Error::MinimalSectionUnstable { spread });
    }
    Ok(quad)
}

/// Moreau envelope `φ^α(x) = min_y φ(y) + |y - x|²/(2α)`.
pub fn moreau_envelope(f: &ProxFunction, alpha: f64, x: &[f64]) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!(
            "moreau_envelope needs alpha > 0, got {alpha}"
        )));
    }
    let p = f.prox(alpha, x);
    let d = linalg::dist(&p, x);
    Ok(f.value(&p) + d * d / (2.0 * alpha))
}

/// A family `{A_ε}` with a designated limit operator.
#[derive(Clone)]
pub struct OperatorFamily {
    op_at: Arc<dyn Fn(f64) -> MonotoneOp + Send + Sync>,
    pub limit: MonotoneOp,
}

impl std::fmt::Debug for OperatorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorFamily")
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

impl OperatorFamily {
    pub fn new(
        op_at: impl Fn(f64) -> MonotoneOp + Send + Sync + 'static,
        limit: MonotoneOp,
    ) -> Self {
        Self {
            op_at: Arc::new(op_at),
            limit,
        }
    }

    pub fn constant(op: MonotoneOp) -> Self {
        let member = op.clone();
        Self::new(move |_| member.clone(), op)
    }

    pub fn at(&self, eps: f64) -> MonotoneOp {
        (self.op_at)(eps)
    }

    /// Checks that every member in `eps_schedule` shares the limit's domain
    /// closure, compared through projections of the sample points.
    pub fn common_domain(&self, eps_schedule: &[f64], points: &[Vec<f64>]) -> bool {
        let limit = self.limit.domain_closure();
        eps_schedule.iter().all(|&eps| {
            let member = self.at(eps).domain_closure();
            points.iter().all(|p| {
                let a = limit.as_ref().map_or_else(|| p.clone(), |s| s.project(p));
                let b = member.as_ref().map_or_else(|| p.clone(), |s| s.project(p));
                linalg::dist(&a, &b) <= ITERATIVE_TOL
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FamilyConvergenceReport {
    pub alpha: f64,
    /// `(ε, max_y |J^ε_α(y) - J_α(y)|)` in schedule order.
    pub rows: Vec<(f64, f64)>,
    pub threshold: f64,
    pub pass: bool,
}

/// Resolvent convergence of a family on a finite grid of points.
pub fn check_family_convergence(
    fam: &OperatorFamily,
    alpha: f64,
    grid: &[Vec<f64>],
    eps_schedule: &[f64],
    threshold: f64,
) -> Result<FamilyConvergenceReport> {
    if grid.is_empty() {
        return Err(Error::InvalidInput(
            "family convergence grid is empty".into(),
        ));
    }
    let mut rows = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let member = fam.at(eps);
        let mut worst = 0.0f64;
        for y in grid {
            let a = member.resolvent(alpha, y)?;
            let b = fam.limit.resolvent(alpha, y)?;
            worst = worst.max(linalg::dist(&a, &b));
        }
        rows.push((eps, worst));
    }
    let tol = ITERATIVE_TOL;
    let nonincreasing = rows.windows(2).all(|w| w[1].1 <= w[0].1 + tol);
    let last_ok = rows.last().is_some_and(|r| r.1 < threshold);
    Ok(FamilyConvergenceReport {
        alpha,
        rows,
        threshold,
        pass: nonincreasing && last_ok,
    })
}

/// `sup |f(x) - f(y)|² / (|x - y|² (1 ∨ log|x - y|⁻¹))` over the given pairs.
pub fn check_log_lipschitz<F>(f: F, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pairs
        .iter()
        .map(|(x, y)| {
            let r = linalg::dist(x, y);
            let df = linalg::dist(&f(x), &f(y));
            df * df / (r * r * f64::max(1.0, -r.ln()))
        })
        .fold(0.0, f64::max)
}

/// Local boundedness probe: `max |A^α_ε(y)|` over sample points of the ball
/// `B(center, gamma)` that lie in the interior of the limit domain, for
/// every ε of the schedule, at α = 1e-4. A validator, not a proof.
pub fn local_bound(
    fam: &OperatorFamily,
    center: &[f64],
    gamma: f64,
    eps_schedule: &[f64],
    samples: &[Vec<f64>],
) -> Result<f64> {
    const ALPHA: f64 = 1e-4;
    let domain = fam.limit.domain_closure();
    let mut worst = 0.0f64;
    for &eps in eps_schedule {
        let member = fam.at(eps);
        for s in samples {
            if linalg::dist(s, center) > gamma {
                continue;
            }
            if domain
                .as_ref()
                .is_some_and(|d| d.boundary_distance(s) <= EXACT_TOL)
            {
                continue;
            }
            worst = worst.max(linalg::norm(&member.yosida(ALPHA, s)?));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halfline() -> MonotoneOp {
        MonotoneOp::halfspace()
    }

    #[test]
    fn minimal_section_examples() {
        assert_eq!(minimal_section(&halfline(), &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(minimal_section(&halfline(), &[0.0]).unwrap(), vec![0.0]);
        let v = minimal_section(&MonotoneOp::linear_scalar(1.0), &[3.0]).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn minimal_section_outside_domain() {
        assert!(matches!(
            minimal_section(&halfline(), &[-0.5]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn minimal_section_of_sign_graph_at_kink() {
        let op = MonotoneOp::Graph1d {
            graph: MonotoneGraph1D::sign(2.0),
        };
        assert!(minimal_section(&op, &[0.0]).unwrap()[0].abs() < 1e-12);
        assert!((minimal_section(&op, &[0.3]).unwrap()[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn moreau_envelope_examples() {
        let ind = ProxFunction::Indicator {
            set: ConvexSet::nonnegative(),
        };
        assert!((moreau_envelope(&ind, 0.5, &[-1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(moreau_envelope(&ind, 0.5, &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn moreau_envelope_quadratic_against_grid_search() {
        // oracle: brute-force minimisation over a fine y-grid
        let f = ProxFunction::SquaredNorm { c: 1.0 };
        let (alpha, x) = (1.0, 2.0);
        let brute = (0..=400_000)
            .map(|i| -2.0 + 6.0 * i as f64 / 400_000.0)
            .map(|y| 0.5 * y * y + (y - x) * (y - x) / (2.0 * alpha))
            .fold(f64::INFINITY, f64::min);
        let value = moreau_envelope(&f, alpha, &[x]).unwrap();
        assert!((brute - 1.0).abs() < 1e-9);
        assert!((value - brute).abs() < 1e-9);
    }

    #[test]
    fn family_convergence_penalised_halfline() {
        let fam = OperatorFamily::new(
            |eps| MonotoneOp::sum(MonotoneOp::linear_scalar(eps), MonotoneOp::halfspace()),
            MonotoneOp::halfspace(),
        );
        let grid: Vec<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&v| vec![v])
            .collect();
        let eps = [0.1, 0.01, 0.001];
        // oracle: max over the grid of |max(y,0)/(1+αε) - max(y,0)|, evaluated by hand at y = 2
        let want: Vec<f64> = eps.iter().map(|e| 2.0 * e / (1.0 + e)).collect();
        let report = check_family_convergence(&fam, 1.0, &grid, &eps, 1e-2).unwrap();
        for ((_, got), w) in report.rows.iter().zip(&want) {
            assert!((got - w).abs() < 1e-8, "{got} vs {w}");
        }
        assert!((report.rows[0].1 - 0.181_818_181_8).abs() < 1e-8);
        assert!(report.pass);
    }

    #[test]
    fn family_convergence_constant_family() {
        let fam = OperatorFamily::constant(MonotoneOp::halfspace());
        let grid: Vec<Vec<f64>> = [-2.0, 0.0, 2.0].iter().map(|&v| vec![v]).collect();
        let report = check_family_convergence(&fam, 1.0, &grid, &[0.1, 0.01], 1e-2).unwrap();
        assert!(report.rows.iter().all(|r| r.1 == 0.0));
        assert!(report.pass);
    }

    #[test]
    fn family_convergence_wrong_limit_fails() {
        let fam = OperatorFamily::new(
            |eps| MonotoneOp::Indicator {
                set: ConvexSet::at_least(eps),
            },
            MonotoneOp::Indicator {
                set: ConvexSet::at_least(1.0),
            },
        );
        let grid: Vec<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&v| vec![v])
            .collect();
        let report = check_family_convergence(&fam, 1.0, &grid, &[0.1, 0.01, 0.001], 1e-2).unwrap();
        assert!((report.rows[2].1 - 0.999).abs() < 1e-12);
        assert!(!report.pass);
    }

    #[test]
    fn log_lipschitz_examples() {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![0.0], vec![1.0]),
            (vec![0.5], vec![-0.5]),
            (vec![2.0], vec![3.0]),
        ];
        assert!(check_log_lipschitz(|x| x.to_vec(), &pairs) <= 1.0);
        assert_eq!(check_log_lipschitz(|_| vec![3.0], &pairs), 0.0);
        assert!((check_log_lipschitz(|x| vec![2.0 * x[0]], &pairs) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn common_domain_and_local_bound() {
        let fam = OperatorFamily::new(
            |eps| MonotoneOp::sum(MonotoneOp::linear_scalar(eps), MonotoneOp::halfspace()),
            MonotoneOp::halfspace(),
        );
        let pts: Vec<Vec<f64>> = (-4..=4).map(|i| vec![i as f64 * 0.5]).collect();
        assert!(fam.common_domain(&[0.1, 0.01], &pts));
        let bound = local_bound(&fam, &[1.0], 0.5, &[0.1, 0.01], &pts).unwrap();
        // interior samples 0.5, 1.0, 1.5: |A^α_ε(y)| ≈ εy ≤ 0.15
        assert!(bound < 0.151 && bound > 0.14);
    }
}
