//! Functional iterated-logarithm experiments.
//!
//! Large time: `Z_u(t) = Y(ut)/φ(u)` with `φ(u) = √(u log log u)`, `u > e`.
//! Small time: `Z_u(t) = Y(ut)/ϕ(u)` with `ϕ(u) = √(u log log u⁻¹)`,
//! `u < e⁻¹`. The limit set `Θ = {f : I(f) <= 1}` is approximated from
//! above by a finite net of skeleton paths with energy at most 1; every
//! distance to Θ reported here is a distance to that net (optionally
//! polished by local control optimisation), together with the net slack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::monotone_ops::MonotoneOp;
use crate::optim::{bfgs, BfgsConfig};
use crate::paths::{sup_distance, Control, Path, TimeGrid};
use crate::rng::{Purpose, StreamKey};
use crate::solver::{simulate, ModelSpec, Noise, ReflectedSolution, SkeletonEvaluator};

/// Energy level of the limit set: `½‖h‖² <= 1`.
pub const THETA_LEVEL: f64 = 1.0;

/// `L(u) = log log u`.
pub fn log_log(u: f64) -> f64 {
    u.ln().ln()
}

/// `φ(u) = √(u L(u))`, `u > e`.
pub fn phi_large(u: f64) -> f64 {
    (u * log_log(u)).sqrt()
}

/// `ϕ(u) = √(u G(u))` with `G(u) = log log u⁻¹`, `0 < u < e⁻¹`.
pub fn phi_small(u: f64) -> f64 {
    (u * (1.0 / u).ln().ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionSystem {
    /// `Γ_c(y) = y / c`.
    LinearScaling,
    /// General C² contractions; recognised but not supported.
    Curved,
}

impl ContractionSystem {
    pub fn apply(&self, c: f64, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            ContractionSystem::LinearScaling => Ok(linalg::scale(y, 1.0 / c)),
            ContractionSystem::Curved => Err(Error::UnsupportedContraction(
                "curved contraction systems need user-supplied second derivatives".into(),
            )),
        }
    }

    /// Checks the contraction axioms on sample points: `Γ_c(0) = 0`,
    /// monotone contraction in `c`, `Γ_1 = id`, `Γ_{1/c} = Γ_c⁻¹`.
    pub fn check_axioms(&self, scales: &[f64], points: &[Vec<f64>]) -> Result<bool> {
        let origin = vec![0.0; points.first().map_or(1, |p| p.len())];
        for &c in scales {
            if self.apply(c, &origin)?.iter().any(|&v| v != 0.0) {
                return Ok(false);
            }
        }
        for p in points {
            if self.apply(1.0, p)? != *p {
                return Ok(false);
            }
            for &c in scales {
                let back = self.apply(1.0 / c, &self.apply(c, p)?)?;
                if linalg::dist(&back, p) > 1e-12 * linalg::norm(p).max(1.0) {
                    return Ok(false);
                }
            }
        }
        for pair in points.windows(2) {
            for &a in scales {
                for &b in scales {
                    let (big, small) = if a >= b { (a, b) } else { (b, a) };
                    let d_big =
                        linalg::dist(&self.apply(big, &pair[0])?, &self.apply(big, &pair[1])?);
                    let d_small =
                        linalg::dist(&self.apply(small, &pair[0])?, &self.apply(small, &pair[1])?);
                    if d_big > d_small * (1.0 + 1e-12) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Coefficients of the rescaled process under `Γ_c(y) = y/c`:
/// `b̃(y) = (α/c)·b(c y)`, `σ̃(y) = σ(c y)`, `Ã(y) = (α/c)·A(c y)`.
pub fn transformed_coefficients(
    model: &ModelSpec,
    c: f64,
    alpha: f64,
    system: ContractionSystem,
) -> Result<ModelSpec> {
    if system != ContractionSystem::LinearScaling {
        return Err(Error::UnsupportedContraction(format!("{system:?}")));
    }
    let e = std::f64::consts::E;
    if !(alpha > e || (alpha > 0.0 && alpha < 1.0 / e)) || !(c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "transformed coefficients need alpha > e or alpha < 1/e and c > 0 (alpha = {alpha}, c = {c})"
        )));
    }
    let gain = alpha / c;
    Ok(ModelSpec {
        m: model.m,
        k: model.k,
        drift: model.drift.rescaled(gain, c),
        diffusion: model.diffusion.rescaled(c),
        op: MonotoneOp::scaled(model.op.clone(), gain, c),
        x0: linalg::scale(&model.x0, 1.0 / c),
    })
}

fn rescale(y: &Path, u: f64, scale: f64, out: &TimeGrid) -> Result<Path> {
    let needed = u * out.horizon;
    if needed > y.grid.horizon * (1.0 + 1e-12) {
        return Err(Error::HorizonTooShort {
            needed,
            available: y.grid.horizon,
        });
    }
    let mut z = Path::zeros(*out, y.dim);
    for n in 0..out.nodes() {
        let t = (u * out.time(n)).min(y.grid.horizon);
        let v = y.at_time(t)?;
        for (zi, vi) in z.node_mut(n).iter_mut().zip(v) {
            *zi = vi / scale;
        }
    }
    Ok(z)
}

/// `Z_u(t_n) = Y(u t_n)/φ(u)` on `out`, linear interpolation between nodes of `Y`.
pub fn rescale_large(y: &Path, u: f64, out: &TimeGrid) -> Result<Path> {
    if !(u > std::f64::consts::E) {
        return Err(Error::InvalidInput(format!(
            "large-time rescaling needs u > e, got {u}"
        )));
    }
    rescale(y, u, phi_large(u), out)
}

/// `Z_u(t_n) = Y(u t_n)/ϕ(u)` for `0 < u < e⁻¹`.
pub fn rescale_small(y: &Path, u: f64, out: &TimeGrid) -> Result<Path> {
    if !(u > 0.0 && u < (-1.0f64).exp()) {
        return Err(Error::InvalidInput(format!(
            "small-time rescaling needs 0 < u < 1/e, got {u}"
        )));
    }
    rescale(y, u, phi_small(u), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    /// Grid of the net members, `[0, T0]`.
    pub horizon: f64,
    pub steps: usize,
    pub control_segments: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            steps: 256,
            control_segments: 32,
        }
    }
}

/// Finite inner approximation of `Θ = {f : I(f) <= 1}`.
#[derive(Debug, Clone)]
pub struct LimitSetNet {
    pub model: ModelSpec,
    pub members: Vec<Path>,
    pub controls: Vec<Control>,
    /// Indices of the constant-rate extreme rays (energy exactly 1).
    pub extreme: Vec<usize>,
    /// Largest nearest-neighbour sup-distance between members.
    pub net_resolution: f64,
    pub config: NetConfig,
}

/// Builds `M` skeleton paths from controls uniform on the discretised
/// energy ball `½‖h‖² <= 1`, plus the zero control and the `2k` extreme
/// rays `ḣ ≡ ±√(2/T)·e_i`.
/// With `refine`, every random control is also pushed radially onto the
/// energy sphere, doubling the random part of the net.
pub fn build_limit_set_net(
    model: &ModelSpec,
    count: usize,
    seed: u64,
    refine: bool,
    config: NetConfig,
) -> Result<LimitSetNet> {
    if count == 0 {
        return Err(Error::InvalidInput("limit-set net needs M >= 1".into()));
    }
    let grid = TimeGrid::new(config.horizon, config.steps)?;
    let control_grid = TimeGrid::new(config.horizon, config.control_segments)?;
    let eval = SkeletonEvaluator::new(model, grid, config.control_segments)?;
    let k = model.k;
    let dim = config.control_segments * k;
    let radius = (2.0 * THETA_LEVEL / control_grid.dt()).sqrt();

    let mut controls = vec![Control::zero(control_grid, k)];
    let mut extreme = Vec::new();
    let ray = (2.0 * THETA_LEVEL / config.horizon).sqrt();
    for i in 0..k {
        for sign in [1.0, -1.0] {
            let mut rate = vec![0.0; k];
            rate[i] = sign * ray;
            extreme.push(controls.len());
            controls.push(Control::constant(control_grid, &rate));
        }
    }
    for r in 0..count {
        let mut s = StreamKey::new(seed, Purpose::LimitSetNet, r as u64).stream();
        let dir: Vec<f64> = (0..dim).map(|_| s.normal()).collect();
        let norm = linalg::norm(&dir);
        let rho = radius * s.uniform().powf(1.0 / dim as f64);
        controls.push(Control::new(
            control_grid,
            k,
            linalg::scale(&dir, rho / norm),
        )?);
        if refine {
            controls.push(Control::new(
                control_grid,
                k,
                linalg::scale(&dir, radius / norm),
            )?);
        }
    }
    let members = controls
        .iter()
        .map(|h| eval.path(h.flat()))
        .collect::<Result<Vec<_>>>()?;
    let mut net_resolution = 0.0f64;
    for (i, a) in members.iter().enumerate() {
        let nearest = members
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, b)| sup_distance(a, b).unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            net_resolution = net_resolution.max(nearest);
        }
    }
    Ok(LimitSetNet {
        model: model.clone(),
        members,
        controls,
        extreme,
        net_resolution,
        config,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitDistance {
    /// Best upper bound on `d(z, Θ)` (polished when requested).
    pub distance: f64,
    /// `min` over net members, before polishing.
    pub net_distance: f64,
    pub nearest_member: usize,
    pub net_slack: f64,
}

/// `d(z, Θ-net)`, optionally polished by minimising a soft maximum of the
/// pointwise distance over controls on the energy ball (radial retraction
/// keeps every iterate inside the ball).
pub fn dist_to_limit_set(z: &Path, net: &LimitSetNet, polish: bool) -> Result<LimitDistance> {
    if net.members.is_empty() {
        return Err(Error::EmptyNet);
    }
    let grid = net.members[0].grid;
    let z = if z.grid.same_as(&grid) {
        z.clone()
    } else {
        if (z.grid.horizon - grid.horizon).abs() > 1e-12 * grid.horizon {
            return Err(Error::GridMismatch(
                "path and net live on different horizons".into(),
            ));
        }
        let nodes: Vec<Vec<f64>> = grid.times().map(|t| z.at_time(t)).collect::<Result<_>>()?;
        Path::from_nodes(grid, &nodes)?
    };
    let (nearest_member, net_distance) = net
        .members
        .iter()
        .enumerate()
        .map(|(i, f)| (i, sup_distance(&z, f).unwrap_or(f64::INFINITY)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .unwrap();
    let mut distance = net_distance;
    if polish && net_distance > 0.0 {
        distance = distance.min(polish_distance(&z, net, nearest_member)?);
    }
    Ok(LimitDistance {
        distance,
        net_distance,
        nearest_member,
        net_slack: net.net_resolution,
    })
}

fn polish_distance(z: &Path, net: &LimitSetNet, start: usize) -> Result<f64> {
    let cfg = net.config;
    let grid = TimeGrid::new(cfg.horizon, cfg.steps)?;
    let eval = SkeletonEvaluator::new(&net.model, grid, cfg.control_segments)?;
    let control_dt = cfg.horizon / cfg.control_segments as f64;
    let radius = (2.0 * THETA_LEVEL / control_dt).sqrt();
    let retract = |v: &[f64]| -> Vec<f64> {
        let n = linalg::norm(v);
        if n > radius {
            linalg::scale(v, radius / n)
        } else {
            v.to_vec()
        }
    };
    let m = net.model.m;
    let target = z.flat();
    let pointwise = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; grid.nodes() * m];
        eval.run(&retract(v), &mut out)
            .expect("validated evaluator");
        (0..grid.nodes())
            .map(|n| linalg::dist(&out[n * m..(n + 1) * m], &target[n * m..(n + 1) * m]))
            .collect()
    };
    let sup = |v: &[f64]| pointwise(v).into_iter().fold(0.0, f64::max);

    let mut v = net.controls[start].flat().to_vec();
    let mut best = sup(&v);
    for temperature in [0.05, 0.02, 0.008, 0.003] {
        let soft = |p: &[f64]| {
            let d = pointwise(p);
            let top = d.iter().copied().fold(0.0, f64::max);
            top + temperature
                * d.iter()
                    .map(|x| ((x - top) / temperature).exp())
                    .sum::<f64>()
                    .ln()
        };
        let run = bfgs(
            soft,
            &v,
            BfgsConfig {
                max_iter: 150,
                ..BfgsConfig::default()
            },
        );
        v = retract(&run.x);
        best = best.min(sup(&v));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlilConfig {
    /// Fine steps of the single long simulation per seed.
    pub n_max: usize,
    pub net_size: usize,
    pub net: NetConfig,
    pub polish: bool,
    pub refine_net: bool,
    pub net_seed: u64,
}

impl Default for FlilConfig {
    fn default() -> Self {
        Self {
            n_max: 1 << 22,
            net_size: 256,
            net: NetConfig::default(),
            polish: true,
            refine_net: false,
            net_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlilRow {
    pub seed: u64,
    pub j: u32,
    pub u: f64,
    pub dist: f64,
    pub net_dist: f64,
    pub nearest_member_id: usize,
    /// `Z_u(T0)` (first coordinate).
    pub endpoint: f64,
    /// Smallest first coordinate of `Z_u` over the nodes.
    pub z_min: f64,
    /// Fine simulation steps per output node inside the window.
    pub fine_steps_per_node: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlilReport {
    pub c: f64,
    pub small_time: bool,
    pub rows: Vec<FlilRow>,
    /// `(seed, extreme member id, min_j d(Z_{c^j}, f))`.
    pub recurrence: Vec<(u64, usize, f64)>,
    pub net_slack: f64,
    pub net_members: usize,
}

impl FlilReport {
    /// Max of `dist` over the last `window` valid j's of one seed.
    pub fn trailing_max(&self, seed: u64, window: usize) -> f64 {
        let rows: Vec<&FlilRow> = self.rows.iter().filter(|r| r.seed == seed).collect();
        rows.iter()
            .rev()
            .take(window)
            .map(|r| r.dist)
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "seed,j,u,dist,nearest_member_id")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.seed, r.j, r.u, r.dist, r.nearest_member_id
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// The scales `u_j = c^{±j}` that fall in the admissible range.
pub fn flil_scales(c: f64, j_max: u32, small_time: bool) -> Vec<(u32, f64)> {
    (1..=j_max)
        .map(|j| {
            let u = if small_time {
                c.powi(-(j as i32))
            } else {
                c.powi(j as i32)
            };
            (j, u)
        })
        .filter(|&(_, u)| {
            if small_time {
                u < (-1.0f64).exp()
            } else {
                u > std::f64::consts::E
            }
        })
        .collect()
}

/// Simulation grid `[0, u_far·T0]` with `n_max` steps, where `u_far` is the
/// most distant admissible scale.
pub fn flil_grid(c: f64, j_max: u32, small_time: bool, cfg: &FlilConfig) -> Result<TimeGrid> {
    let scales = flil_scales(c, j_max, small_time);
    let far = if small_time {
        scales.first()
    } else {
        scales.last()
    };
    match far {
        Some(&(_, u)) => TimeGrid::new(u * cfg.net.horizon, cfg.n_max),
        None => Err(Error::HorizonTooShort {
            needed: if small_time {
                (-1.0f64).exp()
            } else {
                std::f64::consts::E
            },
            available: if small_time {
                c.powi(-(j_max as i32))
            } else {
                c.powi(j_max as i32)
            },
        }),
    }
}

/// The single long trajectory behind every rescaled window of one seed.
pub fn flil_trajectory(model: &ModelSpec, seed: u64, grid: &TimeGrid) -> Result<ReflectedSolution> {
    simulate(
        model,
        1.0,
        None,
        Noise::Stream(StreamKey::new(seed, Purpose::Brownian, 0)),
        grid,
    )
}

/// Distances `d(Z_{c^j}, Θ-net)` along one long trajectory per seed, plus
/// the recurrence statistic towards the extreme rays.
pub fn flil_experiment(
    model: &ModelSpec,
    c: f64,
    j_max: u32,
    seeds: &[u64],
    small_time: bool,
    cfg: &FlilConfig,
) -> Result<FlilReport> {
    if !(c > 1.0) {
        return Err(Error::InvalidInput(format!("flil needs c > 1, got {c}")));
    }
    let scales = flil_scales(c, j_max, small_time);
    let sim_grid = flil_grid(c, j_max, small_time, cfg)?;
    let net = build_limit_set_net(model, cfg.net_size, cfg.net_seed, cfg.refine_net, cfg.net)?;
    let out_grid = TimeGrid::new(cfg.net.horizon, cfg.net.steps)?;

    let mut rows = Vec::new();
    let mut recurrence = Vec::new();
    for &seed in seeds {
        let y = flil_trajectory(model, seed, &sim_grid)?.x;
        let mut best_extreme = vec![f64::INFINITY; net.extreme.len()];
        for &(j, u) in &scales {
            let z = if small_time {
                rescale_small(&y, u, &out_grid)?
            } else {
                rescale_large(&y, u, &out_grid)?
            };
            let d = dist_to_limit_set(&z, &net, cfg.polish)?;
            for (slot, &idx) in best_extreme.iter_mut().zip(&net.extreme) {
                *slot = slot.min(sup_distance(&z, &net.members[idx])?);
            }
            rows.push(FlilRow {
                seed,
                j,
                u,
                dist: d.distance,
                net_dist: d.net_distance,
                nearest_member_id: d.nearest_member,
                endpoint: z.last()[0],
                z_min: (0..z.len())
                    .map(|n| z.node(n)[0])
                    .fold(f64::INFINITY, f64::min),
                fine_steps_per_node: u * cfg.net.horizon / sim_grid.dt() / cfg.net.steps as f64,
            });
        }
        for (&idx, d) in net.extreme.iter().zip(best_extreme) {
            recurrence.push((seed, idx, d));
        }
    }
    Ok(FlilReport {
        c,
        small_time,
        rows,
        recurrence,
        net_slack: net.net_resolution,
        net_members: net.members.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_functions_at_fixed_points() {
        let u = std::f64::consts::E.powf(std::f64::consts::E);
        assert!((log_log(u) - 1.0).abs() < 1e-14);
        assert!((phi_large(u) - u.sqrt()).abs() < 1e-10);
        let s = (-std::f64::consts::E).exp();
        assert!((phi_small(s) - s.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn rescale_large_examples() {
        let u = std::f64::consts::E.powf(std::f64::consts::E);
        let out = TimeGrid::new(1.0, 4).unwrap();
        let yg = TimeGrid::new(u, 64).unwrap();
        let lin = Path::scalar_fn(yg, |t| t);
        let z = rescale_large(&lin, u, &out).unwrap();
        assert!((z.last()[0] - (std::f64::consts::E / 2.0).exp()).abs() < 1e-10);
        assert!((z.last()[0] - 3.89279).abs() < 1e-4);
        let zero = rescale_large(&Path::zeros(yg, 1), u, &out).unwrap();
        assert!(zero.flat().iter().all(|&v| v == 0.0));
        let root = rescale_large(&Path::scalar_fn(yg, f64::sqrt), u, &out).unwrap();
        assert!((root.last()[0] - 1.0).abs() < 1e-12);
        assert!(matches!(
            rescale_large(&lin, 2.0 * u, &out),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn rescale_small_examples() {
        let u = (-std::f64::consts::E).exp();
        let out = TimeGrid::new(1.0, 4).unwrap();
        let yg = TimeGrid::new(u, 16).unwrap();
        let z = rescale_small(&Path::scalar_fn(yg, |t| t), u, &out).unwrap();
        assert!((z.last()[0] - u.sqrt()).abs() < 1e-12);
        let z = rescale_small(&Path::scalar_fn(yg, f64::sqrt), u, &out).unwrap();
        assert!((z.last()[0] - 1.0).abs() < 1e-12);
        assert!(rescale_small(&Path::zeros(yg, 1), u, &out)
            .unwrap()
            .flat()
            .iter()
            .all(|&v| v == 0.0));
        assert!(rescale_small(&Path::zeros(yg, 1), 0.5, &out).is_err());
    }

    #[test]
    fn transformed_coefficients_examples() {
        let model = ModelSpec::reflected_bm(0.0);
        let alpha = 100.0;
        let c = phi_large(alpha);
        let t =
            transformed_coefficients(&model, c, alpha, ContractionSystem::LinearScaling).unwrap();
        assert_eq!(t.drift.eval(&[3.0]), vec![0.0]);
        assert_eq!(t.diffusion.eval(&[3.0], 1), vec![1.0]);
        assert_eq!(t.op.resolvent(0.1, &[-2.0]).unwrap(), vec![0.0]);
        assert_eq!(t.op.resolvent(0.1, &[2.0]).unwrap(), vec![2.0]);
        assert!(matches!(
            transformed_coefficients(&model, c, alpha, ContractionSystem::Curved),
            Err(Error::UnsupportedContraction(_))
        ));
        assert!(
            transformed_coefficients(&model, c, 1.0, ContractionSystem::LinearScaling).is_err()
        );
    }

    #[test]
    fn curved_contractions_rejected() {
        assert!(ContractionSystem::Curved.apply(2.0, &[1.0]).is_err());
    }

    #[test]
    fn net_contains_extreme_ray() {
        let model = ModelSpec::driftless(MonotoneOp::Zero, vec![0.0]);
        let net = build_limit_set_net(&model, 1, 3, false, NetConfig::default()).unwrap();
        assert_eq!(net.members.len(), 4);
        let line = Path::scalar_fn(net.members[0].grid, |t| std::f64::consts::SQRT_2 * t);
        let d = dist_to_limit_set(&line, &net, false).unwrap();
        assert!(d.distance < 1e-12);
        let again = build_limit_set_net(&model, 1, 3, false, NetConfig::default()).unwrap();
        assert_eq!(again.members, net.members);
    }

    #[test]
    fn empty_net_error() {
        let model = ModelSpec::driftless(MonotoneOp::Zero, vec![0.0]);
        let mut net = build_limit_set_net(&model, 1, 0, false, NetConfig::default()).unwrap();
        net.members.clear();
        let z = Path::zeros(TimeGrid::new(1.0, 256).unwrap(), 1);
        assert_eq!(
            dist_to_limit_set(&z, &net, false).unwrap_err(),
            Error::EmptyNet
        );
    }

    #[test]
    fn scales_respect_ranges() {
        let large = flil_scales(1.5, 5, false);
        assert_eq!(large.iter().map(|s| s.0).collect::<Vec<_>>(), vec![3, 4, 5]);
        let small = flil_scales(1.5, 5, true);
        assert_eq!(small.iter().map(|s| s.0).collect::<Vec<_>>(), vec![3, 4, 5]);
    }
}
