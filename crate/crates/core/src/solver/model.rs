use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::monotone_ops::{MonotoneOp, EXACT_TOL};

/// Drift coefficient `b: ℝ^m → ℝ^m` in the symbolic config language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drift {
    Constant {
        value: Vec<f64>,
    },
    /// `offset + matrix · x`
    Affine {
        offset: Vec<f64>,
        matrix: Vec<Vec<f64>>,
    },
    /// Scalar, piecewise linear through `(xs, ys)`, constant beyond the ends.
    Tabulated1d {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

/// Diffusion coefficient `σ: ℝ^m → ℝ^{m×k}` (rows of the matrix).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diffusion {
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    /// `base + Σ_i x_i · slopes[i]`
    Affine {
        base: Vec<Vec<f64>>,
        slopes: Vec<Vec<Vec<f64>>>,
    },
    /// Scalar (`m = k = 1`), piecewise linear through `(xs, ys)`.
    Tabulated1d {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let s = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + s * (ys[i + 1] - ys[i])
}

fn check_table(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.is_empty() || xs.len() != ys.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "tabulated coefficient needs matching, strictly increasing abscissae".into(),
        ));
    }
    Ok(())
}

impl Drift {
    pub fn zero(m: usize) -> Self {
        Drift::Constant {
            value: vec![0.0; m],
        }
    }

    /// `b(x) = c·x` in dimension 1.
    pub fn linear_scalar(c: f64) -> Self {
        Drift::Affine {
            offset: vec![0.0],
            matrix: vec![vec![c]],
        }
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Drift::Constant { value } => out.copy_from_slice(value),
            Drift::Affine { offset, matrix } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = offset[i] + linalg::dot(&matrix[i], x);
                }
            }
            Drift::Tabulated1d { xs, ys } => out[0] = interp(xs, ys, x[0]),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// `y ↦ gain · b(dilation · y)`, staying inside the symbolic language.
    pub fn rescaled(&self, gain: f64, dilation: f64) -> Drift {
        match self {
            Drift::Constant { value } => Drift::Constant {
                value: linalg::scale(value, gain),
            },
            Drift::Affine { offset, matrix } => Drift::Affine {
                offset: linalg::scale(offset, gain),
                matrix: matrix
                    .iter()
                    .map(|r| linalg::scale(r, gain * dilation))
                    .collect(),
            },
            Drift::Tabulated1d { xs, ys } => Drift::Tabulated1d {
                xs: xs.iter().map(|v| v / dilation).collect(),
                ys: linalg::scale(ys, gain),
            },
        }
    }

    fn check(&self, m: usize) -> Result<()> {
        let ok = match self {
            Drift::Constant { value } => value.len() == m,
            Drift::Affine { offset, matrix } => {
                offset.len() == m && matrix.len() == m && matrix.iter().all(|r| r.len() == m)
            }
            Drift::Tabulated1d { xs, ys } => {
                check_table(xs, ys)?;
                m == 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "drift shape does not match m = {m}"
            )))
        }
    }
}

impl Diffusion {
    pub fn identity(m: usize) -> Self {
        Diffusion::Constant {
            matrix: (0..m)
                .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn scalar(s: f64) -> Self {
        Diffusion::Constant {
            matrix: vec![vec![s]],
        }
    }

    /// Row-major `m x k` matrix into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Diffusion::Constant { matrix } => {
                let k = matrix[0].len();
                for (i, row) in matrix.iter().enumerate() {
                    out[i * k..(i + 1) * k].copy_from_slice(row);
                }
            }
            Diffusion::Affine { base, slopes } => {
                let k = base[0].len();
                for (i, row) in base.iter().enumerate() {
                    for j in 0..k {
                        let mut v = row[j];
                        for (xl, slope) in x.iter().zip(slopes) {
                            v += xl * slope[i][j];
                        }
                        out[i * k + j] = v;
                    }
                }
            }
            Diffusion::Tabulated1d { xs, ys } => out[0] = interp(xs, ys, x[0]),
        }
    }

    pub fn eval(&self, x: &[f64], k: usize) -> Vec<f64> {
        let mut out = vec![0.0; x.len() * k];
        self.eval_into(x, &mut out);
        out
    }

    /// `y ↦ σ(dilation · y)`.
    pub fn rescaled(&self, dilation: f64) -> Diffusion {
        match self {
            Diffusion::Constant { matrix } => Diffusion::Constant {
                matrix: matrix.clone(),
            },
            Diffusion::Affine { base, slopes } => Diffusion::Affine {
                base: base.clone(),
                slopes: slopes
                    .iter()
                    .map(|s| s.iter().map(|r| linalg::scale(r, dilation)).collect())
                    .collect(),
            },
            Diffusion::Tabulated1d { xs, ys } => Diffusion::Tabulated1d {
                xs: xs.iter().map(|v| v / dilation).collect(),
                ys: ys.clone(),
            },
        }
    }

    fn check(&self, m: usize, k: usize) -> Result<()> {
        let shape = |mat: &Vec<Vec<f64>>| mat.len() == m && mat.iter().all(|r| r.len() == k);
        let ok = match self {
            Diffusion::Constant { matrix } => shape(matrix),
            Diffusion::Affine { base, slopes } => {
                shape(base) && slopes.len() == m && slopes.iter().all(shape)
            }
            Diffusion::Tabulated1d { xs, ys } => {
                check_table(xs, ys)?;
                m == 1 && k == 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "diffusion shape does not match m = {m}, k = {k}"
            )))
        }
    }
}

/// `dX ∈ b(X)dt + σ(X)(ḣ dt + √ε dW) - A(X)dt`, `X(0) = x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub m: usize,
    pub k: usize,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub op: MonotoneOp,
    pub x0: Vec<f64>,
}

impl ModelSpec {
    /// `b = 0`, `σ = I`, starting at `x0`.
    pub fn driftless(op: MonotoneOp, x0: Vec<f64>) -> Self {
        let m = x0.len();
        Self {
            m,
            k: m,
            drift: Drift::zero(m),
            diffusion: Diffusion::identity(m),
            op,
            x0,
        }
    }

    /// Reflected Brownian motion on ℝ₊ started at `x0`.
    pub fn reflected_bm(x0: f64) -> Self {
        Self::driftless(MonotoneOp::halfspace(), vec![x0])
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_diffusion(mut self, k: usize, diffusion: Diffusion) -> Self {
        self.k = k;
        self.diffusion = diffusion;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shapes()?;
        let distance = self.op.domain_distance(&self.x0);
        if distance > EXACT_TOL {
            return Err(Error::OutsideDomain { distance });
        }
        Ok(())
    }

    /// Dimension and coefficient checks only; `x0` may lie outside D(A).
    pub fn validate_shapes(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.x0.len() != self.m {
            return Err(Error::InvalidInput(format!(
                "model dimensions m = {}, k = {}, |x0| = {} are inconsistent",
                self.m,
                self.k,
                self.x0.len()
            )));
        }
        self.drift.check(self.m)?;
        self.diffusion.check(self.m, self.k)?;
        Ok(())
    }
}
