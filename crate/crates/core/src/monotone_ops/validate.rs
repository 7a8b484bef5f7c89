use serde::Serialize;

use super::{moreau_envelope, MonotoneOp, ProxFunction};
use crate::error::Result;
use crate::linalg;
use crate::rng::{Purpose, StreamKey};

/// Worst-case observations of the randomized resolvent property suite.
/// Violations are reported as signed slack: positive means broken.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub cases: usize,
    /// max(|Jx - Jy| - |x - y|)
    pub nonexpansive_slack: f64,
    /// max(|A^α x - A^α y| - |x - y|/α)
    pub yosida_lipschitz_slack: f64,
    /// max(-⟨A^α x - A^α y, x - y⟩)
    pub monotonicity_slack: f64,
    /// max(|∇φ^α_fd - A^α| - max(1e-6, 1e-3·|A^α|)), when a function is given.
    pub moreau_gradient_slack: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Randomized checks of nonexpansiveness, the 1/α Lipschitz bound and
/// monotonicity of A^α; α ~ U(0, 10], points ~ U[-10, 10]^m. If `function`
/// is given, `op` is taken to be its subdifferential and the Moreau
/// gradient identity is checked by central differences as well.
pub fn property_suite(
    op: &MonotoneOp,
    function: Option<&ProxFunction>,
    dim: usize,
    cases: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let mut stream = StreamKey::new(seed, Purpose::OperatorSampling, 0).stream();
    let point = |s: &mut crate::rng::Stream| -> Vec<f64> {
        (0..dim).map(|_| -10.0 + 20.0 * s.uniform()).collect()
    };
    let tol = if op.tolerance() > super::EXACT_TOL {
        1e-8
    } else {
        1e-10
    };
    let mut nonexp = f64::NEG_INFINITY;
    let mut lip = f64::NEG_INFINITY;
    let mut mono = f64::NEG_INFINITY;
    for _ in 0..cases {
        let alpha = 10.0 * (1.0 - stream.uniform());
        let x = point(&mut stream);
        let y = point(&mut stream);
        let r = linalg::dist(&x, &y);
        let jx = op.resolvent(alpha, &x)?;
        let jy = op.resolvent(alpha, &y)?;
        nonexp = nonexp.max(linalg::dist(&jx, &jy) - r);
        let ax: Vec<f64> = x.iter().zip(&jx).map(|(a, b)| (a - b) / alpha).collect();
        let ay: Vec<f64> = y.iter().zip(&jy).map(|(a, b)| (a - b) / alpha).collect();
        // scale-aware slack: resolvent error is amplified by 1/α in A^α
        lip = lip.max(linalg::dist(&ax, &ay) - r / alpha - tol / alpha);
        let diff = linalg::sub(&ax, &ay);
        mono = mono.max(-linalg::dot(&diff, &linalg::sub(&x, &y)) - tol / alpha * r);
    }
    let lip = lip + tol;
    let mono = mono + tol;

    let moreau = match function {
        Some(f) => {
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..cases {
                let alpha = 0.1 + 9.9 * stream.uniform();
                let x = point(&mut stream);
                let grad = op.yosida(alpha, &x)?;
                let h = 1e-5;
                for i in 0..dim {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (moreau_envelope(f, alpha, &xp)? - moreau_envelope(f, alpha, &xm)?)
                        / (2.0 * h);
                    let allowed = f64::max(1e-6, 1e-3 * grad[i].abs());
                    worst = worst.max((fd - grad[i]).abs() - allowed);
                }
            }
            Some(worst)
        }
        None => None,
    };

    let pass = nonexp <= tol && lip <= tol && mono <= tol && moreau.is_none_or(|m| m <= 0.0);
    Ok(PropertyReport {
        cases,
        nonexpansive_slack: nonexp,
        yosida_lipschitz_slack: lip,
        monotonicity_slack: mono,
        moreau_gradient_slack: moreau,
        tolerance: tol,
        pass,
    })
}
