use serde::{Deserialize, Serialize};

use super::model::ModelSpec;
use crate::error::{Error, Result};
use crate::linalg;
use crate::paths::{sample_brownian_keyed, Control, Path, TimeGrid};
use crate::rng::{Purpose, StreamKey};

/// Driving noise for one trajectory.
#[derive(Debug, Clone, Copy)]
pub enum Noise<'a> {
    /// No noise; only valid with `ε = 0`.
    None,
    /// A Brownian path on the simulation grid.
    Path(&'a Path),
    /// Brownian path drawn from a keyed stream (hierarchical rule).
    Stream(StreamKey),
}

/// Time-stepping rule for the monotone term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `X_{n+1} = J_{Δt}(X_n + bΔt + σ(ḣΔt + √ε ΔW))`.
    #[default]
    ResolventEuler,
    /// Resolvent Euler for a half-space indicator, with the sub-step
    /// minimum of the free coordinate sampled from its Brownian bridge so
    /// the one-step Skorohod map is exact for frozen coefficients. Needs
    /// stream noise (the bridge uses its own purpose tag).
    BridgeReflection,
}

/// Solution pair `(X, K)` and the running variation `|K|_0^{t_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedSolution {
    pub x: Path,
    pub k: Path,
    pub k_variation: Vec<f64>,
}

impl ReflectedSolution {
    /// Regulator increment `ΔK_n = K(t_{n+1}) - K(t_n)`.
    pub fn dk(&self, n: usize) -> Vec<f64> {
        linalg::sub(self.k.node(n + 1), self.k.node(n))
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "t")?;
        for i in 1..=self.x.dim {
            write!(out, ",x_{i}")?;
        }
        for i in 1..=self.k.dim {
            write!(out, ",k_{i}")?;
        }
        writeln!(out, ",kvar")?;
        for n in 0..self.x.len() {
            write!(out, "{}", self.x.grid.time(n))?;
            for v in self.x.node(n).iter().chain(self.k.node(n)) {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{}", self.k_variation[n])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn resolve_noise(
    model: &ModelSpec,
    eps: f64,
    noise: Noise<'_>,
    grid: &TimeGrid,
) -> Result<Option<Path>> {
    match noise {
        Noise::None if eps != 0.0 => Err(Error::InvalidInput(
            "noise source required when epsilon > 0".into(),
        )),
        Noise::None => Ok(None),
        Noise::Path(p) => {
            if !p.grid.same_as(grid) || p.dim != model.k {
                return Err(Error::GridMismatch(format!(
                    "noise path (N={}, k={}) vs simulation grid (N={}, k={})",
                    p.grid.steps, p.dim, grid.steps, model.k
                )));
            }
            Ok(Some(p.clone()))
        }
        Noise::Stream(key) => Ok(Some(sample_brownian_keyed(model.k, grid, key))),
    }
}

fn check_inputs(
    model: &ModelSpec,
    eps: f64,
    control: Option<&Control>,
    grid: &TimeGrid,
) -> Result<()> {
    model.validate()?;
    check_driving(model, eps, control, grid)
}

fn check_driving(
    model: &ModelSpec,
    eps: f64,
    control: Option<&Control>,
    grid: &TimeGrid,
) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in [0, 1], got {eps}"
        )));
    }
    if let Some(h) = control {
        h.compatible_with(grid)?;
        if h.dim != model.k {
            return Err(Error::GridMismatch(format!(
                "control dimension {} differs from noise dimension {}",
                h.dim, model.k
            )));
        }
    }
    Ok(())
}

/// Free Euler increment `Y - X_n = bΔt + σ(ḣΔt + √ε ΔW)` written into `y`
/// (as the full predictor `y = X_n + ...`).
#[allow(clippy::too_many_arguments)]
fn predictor(
    model: &ModelSpec,
    x: &[f64],
    rate: Option<&[f64]>,
    dw: Option<&[f64]>,
    sqrt_eps: f64,
    dt: f64,
    drift: &mut [f64],
    sigma: &mut [f64],
    drive: &mut [f64],
    y: &mut [f64],
) {
    let (m, k) = (model.m, model.k);
    model.drift.eval_into(x, drift);
    model.diffusion.eval_into(x, sigma);
    for j in 0..k {
        let mut v = 0.0;
        if let Some(r) = rate {
            v += r[j] * dt;
        }
        if let Some(w) = dw {
            v += sqrt_eps * w[j];
        }
        drive[j] = v;
    }
    for i in 0..m {
        y[i] = x[i] + drift[i] * dt + linalg::dot(&sigma[i * k..(i + 1) * k], drive);
    }
}

/// Resolvent-Euler simulation of the controlled equation.
pub fn simulate(
    model: &ModelSpec,
    eps: f64,
    control: Option<&Control>,
    noise: Noise<'_>,
    grid: &TimeGrid,
) -> Result<ReflectedSolution> {
    simulate_with(Scheme::ResolventEuler, model, eps, control, noise, grid)
}

pub fn simulate_with(
    scheme: Scheme,
    model: &ModelSpec,
    eps: f64,
    control: Option<&Control>,
    noise: Noise<'_>,
    grid: &TimeGrid,
) -> Result<ReflectedSolution> {
    check_inputs(model, eps, control, grid)?;
    let mut bridge = match scheme {
        Scheme::ResolventEuler => None,
        Scheme::BridgeReflection => {
            let axis = model.op.halfspace_axis().ok_or_else(|| {
                Error::InvalidInput(
                    "bridge reflection needs a half-space indicator operator".into(),
                )
            })?;
            let Noise::Stream(key) = noise else {
                return Err(Error::InvalidInput(
                    "bridge reflection needs stream noise".into(),
                ));
            };
            Some((axis, key.with_purpose(Purpose::BridgeMinimum).stream()))
        }
    };
    let w = resolve_noise(model, eps, noise, grid)?;
    let (m, k) = (model.m, model.k);
    let dt = grid.dt();
    let sqrt_eps = eps.sqrt();

    let mut x = Path::zeros(*grid, m);
    let mut kp = Path::zeros(*grid, m);
    let mut kvar = vec![0.0; grid.nodes()];
    x.node_mut(0).copy_from_slice(&model.x0);

    let (mut drift, mut sigma, mut drive, mut y) =
        (vec![0.0; m], vec![0.0; m * k], vec![0.0; k], vec![0.0; m]);
    let mut dw = vec![0.0; k];
    for n in 0..grid.steps {
        let rate = control.map(|h| h.rate_on(grid, n));
        let inc = w.as_ref().map(|w| {
            for j in 0..k {
                dw[j] = w.node(n + 1)[j] - w.node(n)[j];
            }
            &dw[..]
        });
        let xn = x.node(n).to_vec();
        predictor(
            model, &xn, rate, inc, sqrt_eps, dt, &mut drift, &mut sigma, &mut drive, &mut y,
        );
        let next = match bridge.as_mut() {
            None => model.op.resolvent(dt, &y)?,
            Some((axis, stream)) => {
                let a = *axis;
                let row = &sigma[a * k..(a + 1) * k];
                let var = eps * dt * linalg::dot(row, row);
                let (start, end) = (xn[a], y[a]);
                let u = stream.uniform_open();
                let low = 0.5 * (start + end - ((end - start).powi(2) - 2.0 * var * u.ln()).sqrt());
                let mut next = y.clone();
                next[a] = end - low.min(0.0);
                next
            }
        };
        let mut step_var = 0.0;
        for i in 0..m {
            let d = y[i] - next[i];
            kp.node_mut(n + 1)[i] = kp.node(n)[i] + d;
            step_var += d * d;
        }
        kvar[n + 1] = kvar[n] + step_var.sqrt();
        x.node_mut(n + 1).copy_from_slice(&next);
    }
    Ok(ReflectedSolution {
        x,
        k: kp,
        k_variation: kvar,
    })
}

/// Explicit Euler for the Yosida-penalised equation (drift `-A^α`).
/// Requires `Δt <= α/2`. The start point may lie outside D(A).
pub fn simulate_yosida(
    model: &ModelSpec,
    alpha: f64,
    eps: f64,
    control: Option<&Control>,
    noise: Noise<'_>,
    grid: &TimeGrid,
) -> Result<Path> {
    model.validate_shapes()?;
    check_driving(model, eps, control, grid)?;
    let dt = grid.dt();
    if dt > 0.5 * alpha * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation {
            dt,
            limit: 0.5 * alpha,
        });
    }
    let w = resolve_noise(model, eps, noise, grid)?;
    let (m, k) = (model.m, model.k);
    let sqrt_eps = eps.sqrt();
    let mut x = Path::zeros(*grid, m);
    x.node_mut(0).copy_from_slice(&model.x0);
    let (mut drift, mut sigma, mut drive, mut y) =
        (vec![0.0; m], vec![0.0; m * k], vec![0.0; k], vec![0.0; m]);
    let mut dw = vec![0.0; k];
    for n in 0..grid.steps {
        let rate = control.map(|h| h.rate_on(grid, n));
        let inc = w.as_ref().map(|w| {
            for j in 0..k {
                dw[j] = w.node(n + 1)[j] - w.node(n)[j];
            }
            &dw[..]
        });
        let xn = x.node(n).to_vec();
        predictor(
            model, &xn, rate, inc, sqrt_eps, dt, &mut drift, &mut sigma, &mut drive, &mut y,
        );
        let penalty = model.op.yosida(alpha, &xn)?;
        for i in 0..m {
            y[i] -= penalty[i] * dt;
        }
        x.node_mut(n + 1).copy_from_slice(&y);
    }
    Ok(x)
}

/// Repeated evaluation of the deterministic skeleton `X^h` for controls
/// given as flat piecewise-constant rates on a coarser control grid.
/// Inputs are validated once, on construction.
pub struct SkeletonEvaluator<'a> {
    model: &'a ModelSpec,
    grid: TimeGrid,
    steps_per_segment: usize,
}

impl<'a> SkeletonEvaluator<'a> {
    pub fn new(model: &'a ModelSpec, grid: TimeGrid, control_segments: usize) -> Result<Self> {
        model.validate()?;
        if control_segments == 0 || !grid.steps.is_multiple_of(control_segments) {
            return Err(Error::GridMismatch(format!(
                "{control_segments} control segments do not divide {} steps",
                grid.steps
            )));
        }
        Ok(Self {
            model,
            grid,
            steps_per_segment: grid.steps / control_segments,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Writes the `(N+1)·m` node values of `X^h` into `out`.
    pub fn run(&self, rates: &[f64], out: &mut [f64]) -> Result<()> {
        let (m, k) = (self.model.m, self.model.k);
        let (mut drift, mut sigma, mut y) = (vec![0.0; m], vec![0.0; m * k], vec![0.0; m]);
        let dt = self.grid.dt();
        let axis = self.model.op.halfspace_axis();
        let zero = matches!(self.model.op, crate::monotone_ops::MonotoneOp::Zero);
        out[..m].copy_from_slice(&self.model.x0);
        for n in 0..self.grid.steps {
            let seg = n / self.steps_per_segment;
            let rate = &rates[seg * k..(seg + 1) * k];
            let (head, tail) = out.split_at_mut((n + 1) * m);
            let xn = &head[n * m..];
            self.model.drift.eval_into(xn, &mut drift);
            self.model.diffusion.eval_into(xn, &mut sigma);
            for i in 0..m {
                y[i] = xn[i] + (drift[i] + linalg::dot(&sigma[i * k..(i + 1) * k], rate)) * dt;
            }
            let next = &mut tail[..m];
            if zero {
                next.copy_from_slice(&y);
            } else if let (Some(a), crate::monotone_ops::MonotoneOp::Indicator { .. }) =
                (axis, &self.model.op)
            {
                next.copy_from_slice(&y);
                next[a] = next[a].max(0.0);
            } else {
                next.copy_from_slice(&self.model.op.resolvent(dt, &y)?);
            }
        }
        Ok(())
    }

    pub fn path(&self, rates: &[f64]) -> Result<Path> {
        let mut out = vec![0.0; self.grid.nodes() * self.model.m];
        self.run(rates, &mut out)?;
        Path::from_flat(self.grid, self.model.m, out)
    }
}
