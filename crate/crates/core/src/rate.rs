//! Freidlin–Wentzell rate functions.
//!
//! `I(f) = ½ inf{‖h‖² : X^h = f}` where `X^h` is the deterministic skeleton
//! driven by the control `h` in place of the noise. Controls are piecewise
//! constant, so energies are exact sums. The endpoint and path-tracking
//! optimisers certify upper bounds only: the returned minimiser is feasible
//! and its energy is the reported value.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;
use crate::monotone_ops::ConvexSet;
use crate::optim::{bfgs, nelder_mead, BfgsConfig, Minimum};
use crate::paths::{cm_norm, sup_distance, Control, Path, TimeGrid};
use crate::rng::{Purpose, StreamKey};
use crate::solver::{simulate, ModelSpec, Noise, SkeletonEvaluator};

/// Endpoint residual accepted as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Residual above which a stalled feasibility phase declares the target unreachable.
pub const INFEASIBLE_RESIDUAL: f64 = 1e-3;
const PENALTY_START: f64 = 1.0;
const PENALTY_MAX: f64 = 1e14;

fn finite_or_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("Infinity")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateResult {
    /// Rate value; `+∞` when the constraint set is empty.
    #[serde(serialize_with = "finite_or_string")]
    pub value: f64,
    #[serde(skip)]
    pub minimizer: Option<Control>,
    pub residual: f64,
    pub iterations: usize,
}

impl RateResult {
    pub fn infinite(residual: f64, iterations: usize) -> Self {
        Self {
            value: f64::INFINITY,
            minimizer: None,
            residual,
            iterations,
        }
    }

    fn from_control(h: Control, residual: f64, iterations: usize) -> Self {
        Self {
            value: energy(&h),
            minimizer: Some(h),
            residual,
            iterations,
        }
    }
}

/// `½‖h‖²`.
pub fn energy(h: &Control) -> f64 {
    let n = cm_norm(h);
    0.5 * n * n
}

/// The skeleton `X^h` on the control's own grid.
pub fn skeleton(model: &ModelSpec, h: &Control) -> Result<Path> {
    skeleton_on(model, h, &h.grid)
}

/// The skeleton `X^h` on a refinement of the control grid.
pub fn skeleton_on(model: &ModelSpec, h: &Control, grid: &TimeGrid) -> Result<Path> {
    Ok(simulate(model, 0.0, Some(h), Noise::None, grid)?.x)
}

/// Free skeleton `X̂^h` whose coefficients are read at the reflected state
/// `Γ_t(X̂^h)`; `Γ(X̂^h)` equals the constrained skeleton for half-space
/// models.
pub fn skeleton_hat(model: &ModelSpec, h: &Control) -> Result<Path> {
    model.validate()?;
    let axis = model
        .op
        .halfspace_axis()
        .ok_or_else(|| Error::InvalidInput("free skeleton needs a half-space model".into()))?;
    let grid = h.grid;
    let (m, k) = (model.m, model.k);
    let dt = grid.dt();
    let mut out = Path::zeros(grid, m);
    out.node_mut(0).copy_from_slice(&model.x0);
    let mut running_min = f64::INFINITY;
    let (mut b, mut s) = (vec![0.0; m], vec![0.0; m * k]);
    for n in 0..grid.steps {
        let xn = out.node(n).to_vec();
        running_min = running_min.min(xn[axis]);
        let mut reflected = xn.clone();
        reflected[axis] -= running_min.min(0.0);
        model.drift.eval_into(&reflected, &mut b);
        model.diffusion.eval_into(&reflected, &mut s);
        let rate = h.rate(n);
        for i in 0..m {
            out.node_mut(n + 1)[i] =
                xn[i] + b[i] * dt + linalg::dot(&s[i * k..(i + 1) * k], rate) * dt;
        }
    }
    Ok(out)
}

/// Knobs of the control optimisers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Piecewise-constant control segments over `[0, T]`.
    pub control_segments: usize,
    /// Feasibility-phase restarts (the zero control counts as one).
    pub restarts: usize,
    /// Restarts carried into the energy phase.
    pub polish_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            control_segments: 16,
            restarts: 8,
            polish_starts: 2,
            seed: 0,
            max_iter: 400,
        }
    }
}

struct ControlSpace<'a> {
    model: &'a ModelSpec,
    control_grid: TimeGrid,
    eval: SkeletonEvaluator<'a>,
}

impl<'a> ControlSpace<'a> {
    fn new(model: &'a ModelSpec, control_grid: TimeGrid, sim_grid: TimeGrid) -> Result<Self> {
        Ok(Self {
            model,
            control_grid,
            eval: SkeletonEvaluator::new(model, sim_grid, control_grid.steps)?,
        })
    }
}

impl ControlSpace<'_> {
    fn control(&self, v: &[f64]) -> Control {
        Control::new(self.control_grid, self.model.k, v.to_vec()).expect("parameter length fixed")
    }

    fn path(&self, v: &[f64]) -> Path {
        self.eval.path(v).expect("inputs validated up front")
    }

    fn energy(&self, v: &[f64]) -> f64 {
        0.5 * linalg::dot(v, v) * self.control_grid.dt()
    }

    fn dim(&self) -> usize {
        self.control_grid.steps * self.model.k
    }
}

/// Minimises `objective`, falling back to Nelder–Mead when BFGS stalls
/// early; returns the better of the two.
fn minimise<F: Fn(&[f64]) -> f64>(objective: F, start: &[f64], max_iter: usize) -> Minimum {
    let cfg = BfgsConfig {
        max_iter,
        ..BfgsConfig::default()
    };
    let quasi = bfgs(&objective, start, cfg);
    if quasi.converged {
        return quasi;
    }
    let simplex = nelder_mead(&objective, &quasi.x, 0.1, 20 * max_iter, 1e-15);
    if simplex.value < quasi.value {
        Minimum {
            iterations: quasi.iterations + simplex.iterations,
            ..simplex
        }
    } else {
        quasi
    }
}

/// `inf{½‖h‖² : X^h(T) ∈ target}` over piecewise-constant controls.
pub fn rate_endpoint(
    model: &ModelSpec,
    target: &ConvexSet,
    grid: &TimeGrid,
    cfg: &OptimizerConfig,
) -> Result<RateResult> {
    model.validate()?;
    if !target.is_nonempty_description() {
        return Err(Error::InvalidInput("target set is empty".into()));
    }
    if cfg.control_segments == 0 || !grid.steps.is_multiple_of(cfg.control_segments) {
        return Err(Error::GridMismatch(format!(
            "{} control segments do not divide {} simulation steps",
            cfg.control_segments, grid.steps
        )));
    }
    let space = ControlSpace::new(
        model,
        TimeGrid::new(grid.horizon, cfg.control_segments)?,
        *grid,
    )?;
    let residual = |v: &[f64]| target.distance(space.path(v).last());
    let zero = vec![0.0; space.dim()];
    if residual(&zero) <= FEASIBILITY_TOL {
        return Ok(RateResult::from_control(
            space.control(&zero),
            residual(&zero),
            0,
        ));
    }

    // feasibility phase: minimise the squared residual from several starts
    let starts: Vec<Vec<f64>> = (0..cfg.restarts.max(1))
        .map(|r| {
            if r == 0 {
                zero.clone()
            } else {
                let mut s = StreamKey::new(cfg.seed, Purpose::OptimizerRestart, r as u64).stream();
                (0..space.dim()).map(|_| 2.0 * s.normal()).collect()
            }
        })
        .collect();
    let feasibility: Vec<Minimum> = starts
        .par_iter()
        .map(|s| minimise(|v: &[f64]| residual(v).powi(2), s, cfg.max_iter))
        .collect();
    let mut iterations: usize = feasibility.iter().map(|m| m.iterations).sum();
    let mut ranked: Vec<(f64, usize)> = feasibility
        .iter()
        .enumerate()
        .map(|(i, m)| (residual(&m.x), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if ranked[0].0 > INFEASIBLE_RESIDUAL {
        return Ok(RateResult::infinite(ranked[0].0, iterations));
    }

    // energy phase: quadratic penalty with doubling weight
    let picks: Vec<&[f64]> = ranked
        .iter()
        .take(cfg.polish_starts.max(1))
        .filter(|r| r.0 <= INFEASIBLE_RESIDUAL)
        .map(|r| feasibility[r.1].x.as_slice())
        .chain(std::iter::once(zero.as_slice()))
        .collect();
    let polished: Vec<(Option<Vec<f64>>, f64, usize)> = picks
        .par_iter()
        .map(|start| {
            let mut v = start.to_vec();
            let mut mu = PENALTY_START;
            let mut iters = 0;
            loop {
                let m = minimise(
                    |p: &[f64]| space.energy(p) + mu * residual(p).powi(2),
                    &v,
                    cfg.max_iter,
                );
                iters += m.iterations;
                v = m.x;
                let r = residual(&v);
                if r <= FEASIBILITY_TOL {
                    return (Some(v), r, iters);
                }
                if mu > PENALTY_MAX {
                    return (None, r, iters);
                }
                mu *= 2.0;
            }
        })
        .collect();
    iterations += polished.iter().map(|p| p.2).sum::<usize>();
    let best = polished
        .iter()
        .filter_map(|(v, r, _)| v.as_ref().map(|v| (space.energy(v), v, *r)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        Some((_, v, r)) => Ok(RateResult::from_control(space.control(v), r, iterations)),
        None => Err(Error::OptimizerDiverged {
            iterations,
            residual: polished.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        }),
    }
}

/// Upper bound on `I(f)` by tracking `f` to within `tol` in sup-distance,
/// with one control segment per step of `f`'s grid.
pub fn rate_path(
    model: &ModelSpec,
    f: &Path,
    tol: f64,
    cfg: &OptimizerConfig,
) -> Result<RateResult> {
    model.validate()?;
    if f.dim != model.m {
        return Err(Error::GridMismatch(
            "path dimension differs from the model".into(),
        ));
    }
    let space = ControlSpace::new(model, f.grid, f.grid)?;
    let band = 0.5 * tol;
    let violation = |v: &[f64]| {
        let x = space.path(v);
        (0..x.len())
            .map(|n| (linalg::dist(x.node(n), f.node(n)) - band).max(0.0).powi(2))
            .sum::<f64>()
    };
    let mut v = vec![0.0; space.dim()];
    let mut mu = PENALTY_START;
    let mut iterations = 0;
    loop {
        let m = minimise(
            |p: &[f64]| space.energy(p) + mu * violation(p),
            &v,
            cfg.max_iter,
        );
        iterations += m.iterations;
        v = m.x;
        let d = sup_distance(&space.path(&v), f)?;
        if d <= tol {
            return Ok(RateResult::from_control(space.control(&v), d, iterations));
        }
        if mu > PENALTY_MAX {
            if d > INFEASIBLE_RESIDUAL.max(10.0 * tol) {
                return Ok(RateResult::infinite(d, iterations));
            }
            return Err(Error::OptimizerDiverged {
                iterations,
                residual: d,
            });
        }
        mu *= 2.0;
    }
}

fn inverse(sigma: &[f64], m: usize) -> Result<DMatrix<f64>> {
    let mat = DMatrix::from_row_slice(m, m, sigma);
    let inv = mat.clone().try_inverse().ok_or(Error::SingularDiffusion)?;
    if !inv.iter().all(|v| v.is_finite()) || mat.determinant().abs() < 1e-300 {
        return Err(Error::SingularDiffusion);
    }
    Ok(inv)
}

fn initial_mismatch(model: &ModelSpec, f: &Path) -> bool {
    linalg::dist(f.node(0), &model.x0) > 1e-12
}

/// Closed-form `I(f)` for paths in the interior of D(A) with square
/// invertible σ: `ḣ_n = σ(f_n)⁻¹((f_{n+1} - f_n)/Δt - b(f_n))`.
pub fn rate_interior_path(model: &ModelSpec, f: &Path) -> Result<RateResult> {
    model.validate()?;
    if model.m != model.k || f.dim != model.m {
        return Err(Error::SingularDiffusion);
    }
    if initial_mismatch(model, f) {
        return Ok(RateResult::infinite(linalg::dist(f.node(0), &model.x0), 0));
    }
    if let Some(domain) = model.op.domain_closure() {
        for n in 0..f.len() {
            if domain.boundary_distance(f.node(n)) <= crate::monotone_ops::EXACT_TOL {
                return Err(Error::NotInterior { node: n });
            }
        }
    }
    let m = model.m;
    let dt = f.grid.dt();
    let mut rates = Vec::with_capacity(f.grid.steps * m);
    for n in 0..f.grid.steps {
        let x = f.node(n);
        let b = model.drift.eval(x);
        let inv = inverse(&model.diffusion.eval(x, m), m)?;
        let v: Vec<f64> = (0..m)
            .map(|i| (f.node(n + 1)[i] - x[i]) / dt - b[i])
            .collect();
        for i in 0..m {
            rates.push((0..m).map(|j| inv[(i, j)] * v[j]).sum());
        }
    }
    let h = Control::new(f.grid, m, rates)?;
    let residual = sup_distance(&skeleton(model, &h)?, f)?;
    Ok(RateResult::from_control(h, residual, 0))
}

/// `I⁺(f) = inf{Î(g) : Γ(g) = f}` for a half-space model. The preimage is
/// parameterised by a nondecreasing regulator that may grow only at nodes
/// where `f` sits on the boundary; with coefficients read at `Γ_t(g) = f`
/// the problem separates per step and each step is a one-dimensional
/// nonnegative least-squares solve.
pub fn rate_plus_halfspace(model: &ModelSpec, f: &Path) -> Result<RateResult> {
    model.validate()?;
    let axis = model
        .op
        .halfspace_axis()
        .ok_or_else(|| Error::InvalidInput("I⁺ needs a half-space indicator model".into()))?;
    if model.m != model.k || f.dim != model.m {
        return Err(Error::SingularDiffusion);
    }
    if initial_mismatch(model, f) {
        return Ok(RateResult::infinite(linalg::dist(f.node(0), &model.x0), 0));
    }
    const BOUNDARY_TOL: f64 = 1e-12;
    if (0..f.len()).any(|n| f.node(n)[axis] < -BOUNDARY_TOL) {
        return Ok(RateResult::infinite(f64::INFINITY, 0));
    }
    let m = model.m;
    let dt = f.grid.dt();
    let mut rates = Vec::with_capacity(f.grid.steps * m);
    for n in 0..f.grid.steps {
        let x = f.node(n);
        let b = model.drift.eval(x);
        let inv = inverse(&model.diffusion.eval(x, m), m)?;
        let incr: Vec<f64> = (0..m)
            .map(|i| f.node(n + 1)[i] - x[i] - b[i] * dt)
            .collect();
        let v: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| inv[(i, j)] * incr[j]).sum())
            .collect();
        let u: Vec<f64> = (0..m).map(|i| inv[(i, axis)]).collect();
        let push = if f.node(n + 1)[axis] <= BOUNDARY_TOL {
            (linalg::dot(&u, &v) / linalg::dot(&u, &u)).max(0.0)
        } else {
            0.0
        };
        for i in 0..m {
            rates.push((v[i] - push * u[i]) / dt);
        }
    }
    let h = Control::new(f.grid, m, rates)?;
    let residual = sup_distance(&skeleton(model, &h)?, f)?;
    Ok(RateResult::from_control(h, residual, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monotone_ops::MonotoneOp;

    fn unit(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn energy_examples() {
        assert!((energy(&Control::constant(unit(7), &[1.0])) - 0.5).abs() < 1e-14);
        assert_eq!(energy(&Control::zero(unit(7), 1)), 0.0);
        assert!((energy(&Control::constant(unit(3), &[3.0, 4.0])) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn skeleton_examples() {
        let model = ModelSpec::reflected_bm(0.0);
        let up = skeleton(&model, &Control::constant(unit(10), &[1.0])).unwrap();
        for n in 0..up.len() {
            assert!((up.node(n)[0] - unit(10).time(n)).abs() < 1e-14);
        }
        let down = skeleton(&model, &Control::constant(unit(10), &[-1.0])).unwrap();
        assert!(down.flat().iter().all(|&v| v == 0.0));
        let free = ModelSpec::driftless(MonotoneOp::Zero, vec![0.0]);
        let line = skeleton(&free, &Control::constant(unit(10), &[-2.5])).unwrap();
        assert!((line.last()[0] + 2.5).abs() < 1e-14);
    }

    #[test]
    fn interior_path_examples() {
        let free = ModelSpec::driftless(MonotoneOp::Zero, vec![0.0]);
        let g = unit(50);
        let r = rate_interior_path(&free, &Path::scalar_fn(g, |t| t)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!(r.residual < 1e-12);
        let r = rate_interior_path(&free, &Path::scalar_fn(g, |t| 2.0 * t)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let still = ModelSpec::driftless(MonotoneOp::Zero, vec![0.7]);
        assert_eq!(
            rate_interior_path(&still, &Path::scalar_fn(g, |_| 0.7))
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn interior_path_errors() {
        let g = unit(10);
        let singular = ModelSpec::driftless(MonotoneOp::Zero, vec![0.0])
            .with_diffusion(1, crate::solver::Diffusion::scalar(0.0));
        assert_eq!(
            rate_interior_path(&singular, &Path::scalar_fn(g, |t| t)).unwrap_err(),
            Error::SingularDiffusion
        );
        let half = ModelSpec::reflected_bm(0.0);
        assert!(matches!(
            rate_interior_path(&half, &Path::scalar_fn(g, |t| t)),
            Err(Error::NotInterior { node: 0 })
        ));
    }

    #[test]
    fn rate_plus_examples() {
        let model = ModelSpec::reflected_bm(0.0);
        let g = unit(40);
        let r = rate_plus_halfspace(&model, &Path::scalar_fn(g, |t| t)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert_eq!(
            rate_plus_halfspace(&model, &Path::zeros(g, 1))
                .unwrap()
                .value,
            0.0
        );
        let off = rate_plus_halfspace(&model, &Path::scalar_fn(g, |t| 1.0 + t)).unwrap();
        assert!(off.value.is_infinite() && off.minimizer.is_none());
    }

    #[test]
    fn rate_plus_pushes_only_at_boundary() {
        // f goes up, returns to 0 and stays there: the descent into the
        // boundary costs energy, sitting on it does not.
        let model = ModelSpec::reflected_bm(0.0);
        let g = unit(4);
        let f = Path::from_flat(g, 1, vec![0.0, 0.25, 0.0, 0.0, 0.0]).unwrap();
        let r = rate_plus_halfspace(&model, &f).unwrap();
        // slopes +1 then -1 on two steps of 1/4: ½(1 + 1)/4 = 0.25
        assert!((r.value - 0.25).abs() < 1e-12);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn endpoint_trivial_and_infeasible() {
        let model = ModelSpec::reflected_bm(0.0);
        let g = unit(32);
        let cfg = OptimizerConfig::default();
        let r = rate_endpoint(&model, &ConvexSet::at_least(0.0), &g, &cfg).unwrap();
        assert_eq!(r.value, 0.0);
        let r = rate_endpoint(&model, &ConvexSet::at_most(-1.0), &g, &cfg).unwrap();
        assert!(r.value.is_infinite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"Infinity\""));
    }

    #[test]
    fn endpoint_halfline_unit_target() {
        let model = ModelSpec::reflected_bm(0.0);
        let r = rate_endpoint(
            &model,
            &ConvexSet::at_least(1.0),
            &unit(64),
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert!((r.value - 0.5).abs() < 1e-3, "{r:?}");
        assert!(r.residual <= FEASIBILITY_TOL);
        let h = r.minimizer.unwrap();
        assert!((energy(&h) - r.value).abs() < 1e-9);
    }
}
