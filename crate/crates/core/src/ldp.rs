//! Small-noise Monte Carlo.
//!
//! Replica `i` of an experiment with master seed `s` draws its Brownian
//! path from stream `(s, Brownian, i)`, so estimates are reproducible and
//! independent of how replicas are scheduled across workers. Hit counts are
//! integers, which makes aggregation exact in any order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monotone_ops::ConvexSet;
use crate::paths::{sample_brownian_keyed, sup_distance, Control, Path, TimeGrid};
use crate::rate::skeleton_on;
use crate::rng::{Purpose, StreamKey};
use crate::solver::{simulate_with, ModelSpec, Noise, Scheme};

/// Event on a simulated path, in the config language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    Always,
    Never,
    /// `X(T) ∈ set`.
    EndpointIn {
        set: ConvexSet,
    },
    /// `X(t_n) ∈ set` for some node.
    Hits {
        set: ConvexSet,
    },
}

impl Event {
    pub fn holds(&self, path: &Path) -> bool {
        match self {
            Event::Always => true,
            Event::Never => false,
            Event::EndpointIn { set } => set.contains(path.last(), 0.0),
            Event::Hits { set } => (0..path.len()).any(|n| set.contains(path.node(n), 0.0)),
        }
    }
}

/// Discretisation used by the Monte Carlo routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSetup {
    pub grid: TimeGrid,
    #[serde(default)]
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub n_replicas: u64,
    pub seed: u64,
}

impl MCResult {
    fn from_hits(hits: u64, n: u64, seed: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            hits,
            n_replicas: n,
            seed,
        }
    }

    /// 95% normal-approximation interval, clipped to [0, 1].
    pub fn ci95(&self) -> (f64, f64) {
        let half = 1.959_963_984_540_054 * self.std_error;
        (
            (self.estimate - half).max(0.0),
            (self.estimate + half).min(1.0),
        )
    }
}

fn count_hits<F>(n: u64, per_replica: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| per_replica(i).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Bernoulli mean of `event` over `n` replicas of `X^ε`.
pub fn mc_probability<E>(
    model: &ModelSpec,
    eps: f64,
    event: E,
    setup: &McSetup,
    n: u64,
    seed: u64,
) -> Result<MCResult>
where
    E: Fn(&Path) -> bool + Sync,
{
    if n == 0 || !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mc_probability needs n >= 1 and epsilon > 0 (got n = {n}, epsilon = {eps})"
        )));
    }
    model.validate()?;
    let hits = count_hits(n, |i| {
        let key = StreamKey::new(seed, Purpose::Brownian, i);
        let sol = simulate_with(
            setup.scheme,
            model,
            eps,
            None,
            Noise::Stream(key),
            &setup.grid,
        )?;
        Ok(event(&sol.x))
    })?;
    Ok(MCResult::from_hits(hits, n, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub epsilon: f64,
    pub phat: f64,
    pub stderr: f64,
    /// `ε log p̂`; `None` when there were no hits.
    pub eps_log_p: Option<f64>,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub zero_hits: bool,
    /// Clopper–Pearson 95% upper bound on p for zero-hit rows.
    pub cp_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpScan {
    pub rows: Vec<ScanRow>,
    /// Least-squares intercept of `ε log p̂` against ε (extrapolation to ε → 0).
    pub trend_intercept: Option<f64>,
}

impl LdpScan {
    pub fn all_zero_hits(&self) -> bool {
        self.rows.iter().all(|r| r.zero_hits)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "epsilon,phat,stderr,eps_log_p,ci_lo,ci_hi")?;
        for r in &self.rows {
            let elp = r
                .eps_log_p
                .map_or_else(|| "nan".to_string(), |v| v.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epsilon, r.phat, r.stderr, elp, r.ci_lo, r.ci_hi
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Clopper–Pearson two-sided 95% upper bound with zero successes.
pub fn clopper_pearson_zero(n: u64) -> f64 {
    1.0 - 0.025f64.powf(1.0 / n as f64)
}

/// `(ε, p̂, ε log p̂)` over a decreasing ε grid. Every row reuses replicas
/// `0..n` of `seed` (common random numbers across ε).
pub fn ldp_scan<E>(
    model: &ModelSpec,
    event: E,
    eps_grid: &[f64],
    setup: &McSetup,
    n: u64,
    seed: u64,
) -> Result<LdpScan>
where
    E: Fn(&Path) -> bool + Sync,
{
    if eps_grid.is_empty()
        || eps_grid.iter().any(|&e| !(e > 0.0))
        || eps_grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidInput(
            "epsilon grid must be positive and strictly decreasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mc = mc_probability(model, eps, &event, setup, n, seed)?;
        let row = if mc.hits == 0 {
            let cp = clopper_pearson_zero(n);
            ScanRow {
                epsilon: eps,
                phat: 0.0,
                stderr: 0.0,
                eps_log_p: None,
                ci_lo: f64::NEG_INFINITY,
                ci_hi: eps * cp.ln(),
                zero_hits: true,
                cp_upper: Some(cp),
            }
        } else {
            let elp = eps * mc.estimate.ln();
            let half = eps * mc.std_error / mc.estimate;
            ScanRow {
                epsilon: eps,
                phat: mc.estimate,
                stderr: mc.std_error,
                eps_log_p: Some(elp),
                ci_lo: elp - half,
                ci_hi: elp + half,
                zero_hits: false,
                cp_upper: None,
            }
        };
        rows.push(row);
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.eps_log_p.map(|v| (r.epsilon, v)))
        .collect();
    let trend_intercept = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        my - sxy / sxx * mx
    });
    Ok(LdpScan {
        rows,
        trend_intercept,
    })
}

/// `P{ d(√ε W, h) < η, d(X^ε, X^h) > α }` by Monte Carlo, with `ε` in the
/// model convention (so the tube is taken around `√ε W`).
#[allow(clippy::too_many_arguments)]
pub fn fw_tube_estimate(
    model: &ModelSpec,
    h: &Control,
    alpha: f64,
    eta: f64,
    eps: f64,
    setup: &McSetup,
    n: u64,
    seed: u64,
) -> Result<MCResult> {
    if !(alpha > 0.0) || eta < 0.0 {
        return Err(Error::InvalidInput(
            "tube estimate needs alpha > 0 and eta >= 0".into(),
        ));
    }
    if n == 0 || !(eps > 0.0) {
        return Err(Error::InvalidInput(
            "tube estimate needs n >= 1 and epsilon > 0".into(),
        ));
    }
    model.validate()?;
    let grid = setup.grid;
    let fine = h.refine_to(&grid)?;
    let h_path = fine.path();
    let skeleton = skeleton_on(model, &fine, &grid)?;
    let root = eps.sqrt();
    let hits = count_hits(n, |i| {
        let key = StreamKey::new(seed, Purpose::Brownian, i);
        let w = sample_brownian_keyed(model.k, &grid, key);
        let scaled = w.map(|v| root * v);
        if sup_distance(&scaled, &h_path)? >= eta {
            return Ok(false);
        }
        let sol = simulate_with(
            Scheme::ResolventEuler,
            model,
            eps,
            None,
            Noise::Path(&w),
            &grid,
        )?;
        Ok(sup_distance(&sol.x, &skeleton)? > alpha)
    })?;
    Ok(MCResult::from_hits(hits, n, seed))
}

/// Concave modulus: `x log x⁻¹` up to η, continued linearly with the
/// tangent slope `log η⁻¹ - 1` beyond it.
pub fn rho_eta(x: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < (-1.0f64).exp()) {
        return Err(Error::BadEta(eta));
    }
    if x < 0.0 {
        return Err(Error::InvalidInput(format!(
            "rho_eta needs x >= 0, got {x}"
        )));
    }
    Ok(if x == 0.0 {
        0.0
    } else if x <= eta {
        -x * x.ln()
    } else {
        -eta * eta.ln() + (-eta.ln() - 1.0) * (x - eta)
    })
}

/// `g0^{exp(-∫_0^t q)}` with the integral by the trapezoidal rule on the
/// grid of `q` (scalar path), linearly interpolated inside the last cell.
pub fn bihari_bound(g0: f64, q: &Path, t: f64) -> Result<f64> {
    if !(g0 > 0.0 && g0 < 1.0) {
        return Err(Error::BadG0(g0));
    }
    if q.flat().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("bihari_bound needs q >= 0".into()));
    }
    if t < 0.0 || t > q.grid.horizon * (1.0 + 1e-12) {
        return Err(Error::HorizonTooShort {
            needed: t,
            available: q.grid.horizon,
        });
    }
    let dt = q.grid.dt();
    let mut integral = 0.0;
    let mut n = 0;
    while n < q.grid.steps && q.grid.time(n + 1) <= t {
        integral += 0.5 * dt * (q.node(n)[0] + q.node(n + 1)[0]);
        n += 1;
    }
    let rest = t - q.grid.time(n);
    if rest > 0.0 && n < q.grid.steps {
        let end = q.at_time(t)?[0];
        integral += 0.5 * rest * (q.node(n)[0] + end);
    }
    Ok(g0.powf((-integral).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_eta_examples() {
        assert!((rho_eta(0.05, 0.1).unwrap() - 0.05 * 20f64.ln()).abs() < 1e-15);
        assert!((rho_eta(0.05, 0.1).unwrap() - 0.149_786_6).abs() < 1e-6);
        assert!((rho_eta(0.2, 0.1).unwrap() - 0.360_517).abs() < 1e-6);
        let eta = 0.1;
        let left = -eta * f64::ln(eta);
        assert!((rho_eta(eta, eta).unwrap() - left).abs() < 1e-15);
        assert!((rho_eta(eta * (1.0 + 1e-12), eta).unwrap() - left).abs() < 1e-12);
        assert_eq!(rho_eta(0.1, 0.5).unwrap_err(), Error::BadEta(0.5));
        assert!(rho_eta(0.1, 0.0).is_err());
    }

    #[test]
    fn bihari_examples() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let ones = Path::scalar_fn(g, |_| 1.0);
        assert!((bihari_bound(0.01, &ones, 2f64.ln()).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(bihari_bound(0.3, &ones, 0.0).unwrap(), 0.3);
        let zeros = Path::zeros(g, 1);
        for t in [0.0, 0.25, 1.0] {
            assert_eq!(bihari_bound(0.3, &zeros, t).unwrap(), 0.3);
        }
        assert_eq!(
            bihari_bound(1.0, &ones, 0.5).unwrap_err(),
            Error::BadG0(1.0)
        );
    }

    #[test]
    fn clopper_pearson_zero_bound() {
        // 1 - 0.025^{1/n} ≈ 3.689/n for large n
        let n = 1_000_000;
        assert!((clopper_pearson_zero(n) * n as f64 - 3.688_879).abs() < 1e-3);
    }

    #[test]
    fn event_predicates() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let p = Path::from_flat(g, 1, vec![0.0, 2.5, 1.0]).unwrap();
        assert!(Event::Always.holds(&p));
        assert!(!Event::Never.holds(&p));
        assert!(Event::EndpointIn {
            set: ConvexSet::at_least(1.0)
        }
        .holds(&p));
        assert!(!Event::EndpointIn {
            set: ConvexSet::at_least(2.0)
        }
        .holds(&p));
        assert!(Event::Hits {
            set: ConvexSet::at_least(2.0)
        }
        .holds(&p));
    }
}
