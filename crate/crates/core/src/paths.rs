//! Time grids, paths on them, Cameron–Martin controls and Brownian sampling.
//!
//! Brownian paths follow a hierarchical stream rule: write `N = n0·2^L`
//! with `n0` odd. The `n0` coarse increments are drawn first, then each
//! dyadic level of Brownian-bridge midpoints in time order. Draws for a
//! grid with `N/2` steps are a prefix of the draws for `N`, so the coarse
//! path is exactly the restriction of the fine one.

use std::io::{BufRead, Read, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{Purpose, StreamKey};

/// Uniform grid `t_n = n·T/N`, `n = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("TimeGrid requires N >= 1 steps".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "TimeGrid requires a positive finite horizon, got {horizon}"
            )));
        }
        Ok(Self { horizon, steps })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.horizon * n as f64 / self.steps as f64
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |n| self.time(n))
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.steps == other.steps && self.horizon == other.horizon
    }
}

/// Values of an ℝ^m-valued path at the nodes of a grid (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: TimeGrid,
    pub dim: usize,
    values: Vec<f64>,
}

impl Path {
    pub fn from_flat(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() * dim {
            return Err(Error::GridMismatch(format!(
                "path has {} values, grid with {} nodes in dimension {dim} needs {}",
                values.len(),
                grid.nodes(),
                grid.nodes() * dim
            )));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn from_nodes(grid: TimeGrid, nodes: &[Vec<f64>]) -> Result<Self> {
        let dim = nodes.first().map_or(1, |v| v.len());
        let values = nodes.iter().flat_map(|v| v.iter().copied()).collect();
        Self::from_flat(grid, dim, values)
    }

    /// Tabulates `f(t)` at the grid nodes.
    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let values = grid.times().flat_map(&f).collect();
        Self { grid, dim, values }
    }

    pub fn scalar_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, 1, |t| vec![f(t)])
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.nodes() * dim],
        }
    }

    pub fn len(&self) -> usize {
        self.grid.nodes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn node_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.node(self.grid.steps)
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    /// Coordinate `i` as a vector over nodes.
    pub fn coord(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|n| self.node(n)[i]).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Path {
        Path {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Every `stride`-th node, on the coarser grid with `N/stride` steps.
    pub fn restrict(&self, stride: usize) -> Result<Path> {
        if stride == 0 || !self.grid.steps.is_multiple_of(stride) {
            return Err(Error::GridMismatch(format!(
                "cannot restrict {} steps by stride {stride}",
                self.grid.steps
            )));
        }
        let grid = TimeGrid::new(self.grid.horizon, self.grid.steps / stride)?;
        let values = (0..grid.nodes())
            .flat_map(|n| self.node(n * stride).to_vec())
            .collect();
        Path::from_flat(grid, self.dim, values)
    }

    /// Linear interpolation at an arbitrary time in `[0, T]`.
    pub fn at_time(&self, t: f64) -> Result<Vec<f64>> {
        let horizon = self.grid.horizon;
        if t < 0.0 || t > horizon * (1.0 + 1e-12) {
            return Err(Error::HorizonTooShort {
                needed: t,
                available: horizon,
            });
        }
        let pos = (t / self.grid.dt()).min(self.grid.steps as f64);
        let lo = (pos.floor() as usize).min(self.grid.steps);
        let frac = pos - lo as f64;
        if frac == 0.0 || lo == self.grid.steps {
            return Ok(self.node(lo).to_vec());
        }
        let a = self.node(lo);
        let b = self.node(lo + 1);
        Ok(a.iter().zip(b).map(|(x, y)| x + frac * (y - x)).collect())
    }

    pub fn write_csv(&self, path: &FsPath, prefix: &str) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "t")?;
        for i in 1..=self.dim {
            write!(out, ",{prefix}_{i}")?;
        }
        writeln!(out)?;
        for n in 0..self.len() {
            write!(out, "{}", self.grid.time(n))?;
            for v in self.node(n) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a `t, x_1..x_m` CSV written by [`Path::write_csv`].
    pub fn read_csv(path: &FsPath) -> Result<Path> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut dim = 0;
        for rec in rdr.records() {
            let rec = rec?;
            dim = rec.len() - 1;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(e.to_string()))
            };
            times.push(parse(&rec[0])?);
            for field in rec.iter().skip(1) {
                values.push(parse(field)?);
            }
        }
        if times.len() < 2 {
            return Err(Error::InvalidGrid(
                "path CSV needs at least two rows".into(),
            ));
        }
        let grid = TimeGrid::new(*times.last().unwrap(), times.len() - 1)?;
        Path::from_flat(grid, dim, values)
    }

    const MAGIC: &'static [u8; 8] = b"MMSDEP1\0";

    /// Compact little-endian dump: magic, horizon, steps, dim, values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&self.grid.horizon.to_le_bytes())?;
        w.write_all(&(self.grid.steps as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read + BufRead>(mut r: R) -> Result<Path> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Io("not a path dump".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let horizon = f64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        let steps = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let dim = u64::from_le_bytes(word) as usize;
        let grid = TimeGrid::new(horizon, steps)?;
        let mut values = Vec::with_capacity(grid.nodes() * dim);
        for _ in 0..grid.nodes() * dim {
            r.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        Path::from_flat(grid, dim, values)
    }
}

/// Cameron–Martin element with piecewise-constant derivative; `h(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub grid: TimeGrid,
    pub dim: usize,
    /// `ḣ` on step `n` at `derivative[n*dim..(n+1)*dim]`.
    derivative: Vec<f64>,
}

impl Control {
    pub fn new(grid: TimeGrid, dim: usize, derivative: Vec<f64>) -> Result<Self> {
        if derivative.len() != grid.steps * dim {
            return Err(Error::GridMismatch(format!(
                "control has {} derivative values, expected {}",
                derivative.len(),
                grid.steps * dim
            )));
        }
        Ok(Self {
            grid,
            dim,
            derivative,
        })
    }

    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            derivative: vec![0.0; grid.steps * dim],
        }
    }

    pub fn constant(grid: TimeGrid, rate: &[f64]) -> Self {
        let derivative = (0..grid.steps).flat_map(|_| rate.iter().copied()).collect();
        Self {
            grid,
            dim: rate.len(),
            derivative,
        }
    }

    pub fn rate(&self, n: usize) -> &[f64] {
        &self.derivative[n * self.dim..(n + 1) * self.dim]
    }

    pub fn flat(&self) -> &[f64] {
        &self.derivative
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.derivative
    }

    pub fn scaled(&self, c: f64) -> Control {
        Control {
            grid: self.grid,
            dim: self.dim,
            derivative: linalg::scale(&self.derivative, c),
        }
    }

    /// Rate in force during step `n` of a finer simulation grid.
    pub fn rate_on(&self, sim: &TimeGrid, n: usize) -> &[f64] {
        let ratio = sim.steps / self.grid.steps;
        self.rate(n / ratio)
    }

    /// Checks that `sim` refines the control grid over the same horizon.
    pub fn compatible_with(&self, sim: &TimeGrid) -> Result<()> {
        let same_horizon = (self.grid.horizon - sim.horizon).abs() <= 1e-12 * sim.horizon.max(1.0);
        if !same_horizon || !sim.steps.is_multiple_of(self.grid.steps) {
            return Err(Error::GridMismatch(format!(
                "control grid (T={}, N={}) does not divide simulation grid (T={}, N={})",
                self.grid.horizon, self.grid.steps, sim.horizon, sim.steps
            )));
        }
        Ok(())
    }

    /// `h(t_n) = Σ_{j<n} ḣ_j Δt` on the control grid.
    pub fn path(&self) -> Path {
        let dt = self.grid.dt();
        let mut values = vec![0.0; self.grid.nodes() * self.dim];
        for n in 0..self.grid.steps {
            for i in 0..self.dim {
                values[(n + 1) * self.dim + i] = values[n * self.dim + i] + self.rate(n)[i] * dt;
            }
        }
        Path {
            grid: self.grid,
            dim: self.dim,
            values,
        }
    }

    /// The same control on a refinement of its grid.
    pub fn refine_to(&self, sim: &TimeGrid) -> Result<Control> {
        self.compatible_with(sim)?;
        let derivative = (0..sim.steps)
            .flat_map(|n| self.rate_on(sim, n).to_vec())
            .collect();
        Control::new(*sim, self.dim, derivative)
    }

    pub fn write_csv(&self, path: &FsPath) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "t")?;
        for i in 1..=self.dim {
            write!(out, ",hdot_{i}")?;
        }
        writeln!(out)?;
        for n in 0..self.grid.steps {
            write!(out, "{}", self.grid.time(n))?;
            for v in self.rate(n) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `‖h‖ = (Σ_n |ḣ_n|² Δt)^{1/2}`.
pub fn cm_norm(h: &Control) -> f64 {
    (linalg::dot(&h.derivative, &h.derivative) * h.grid.dt()).sqrt()
}

/// `max_n |u(t_n) - v(t_n)|`.
pub fn sup_distance(u: &Path, v: &Path) -> Result<f64> {
    if !u.grid.same_as(&v.grid) || u.dim != v.dim {
        return Err(Error::GridMismatch(format!(
            "sup_distance on grids N={} / N={} (dims {} / {})",
            u.grid.steps, v.grid.steps, u.dim, v.dim
        )));
    }
    Ok((0..u.len())
        .map(|n| linalg::dist(u.node(n), v.node(n)))
        .fold(0.0, f64::max))
}

/// Brownian path for replica 0 of `seed`.
pub fn sample_brownian(k: usize, grid: &TimeGrid, seed: u64) -> Path {
    sample_brownian_keyed(k, grid, StreamKey::new(seed, Purpose::Brownian, 0))
}

/// Brownian path under the hierarchical stream rule (module docs).
pub fn sample_brownian_keyed(k: usize, grid: &TimeGrid, key: StreamKey) -> Path {
    let n = grid.steps;
    let levels = n.trailing_zeros() as usize;
    let base = n >> levels;
    let stride = 1usize << levels;
    let mut stream = key.stream();
    let mut values = vec![0.0; (n + 1) * k];

    let base_sd = (grid.horizon / base as f64).sqrt();
    for i in 0..base {
        let (prev, next) = (i * stride, (i + 1) * stride);
        for c in 0..k {
            values[next * k + c] = values[prev * k + c] + base_sd * stream.normal();
        }
    }
    let mut span = stride;
    let mut interval = grid.horizon / base as f64;
    for _ in 0..levels {
        let half = span / 2;
        let sd = (interval / 4.0).sqrt();
        let mut left = 0;
        while left < n {
            let mid = left + half;
            let right = left + span;
            for c in 0..k {
                let avg = 0.5 * (values[left * k + c] + values[right * k + c]);
                values[mid * k + c] = avg + sd * stream.normal();
            }
            left = right;
        }
        span = half;
        interval /= 2.0;
    }
    Path {
        grid: *grid,
        dim: k,
        values,
    }
}
