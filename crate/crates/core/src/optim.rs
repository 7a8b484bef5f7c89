//! Derivative-free and quasi-Newton minimisers for the small, nonsmooth
//! problems of the rate-function module. Gradients are central finite
//! differences; dimensions stay in the tens.

use crate::linalg;

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Relative decrease below which the run counts as stalled.
    pub f_tol: f64,
    pub fd_step: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-9,
            f_tol: 1e-14,
            fd_step: 1e-6,
        }
    }
}

pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// BFGS on the inverse Hessian with Armijo backtracking.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], cfg: BfgsConfig) -> Minimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut g = fd_gradient(&f, &x, cfg.fd_step);
    let mut hinv = identity(n);
    let mut stalls = 0;
    for iter in 0..cfg.max_iter {
        if linalg::norm(&g) <= cfg.grad_tol {
            return Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            };
        }
        let mut dir: Vec<f64> = (0..n).map(|i| -linalg::dot(&hinv[i], &g)).collect();
        let mut slope = linalg::dot(&dir, &g);
        if slope >= 0.0 {
            hinv = identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = -linalg::dot(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let ft = f(&trial);
            if ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if hinv == identity(n) {
                return Minimum {
                    x,
                    value: fx,
                    iterations: iter,
                    converged: false,
                };
            }
            hinv = identity(n);
            continue;
        };
        let gn = fd_gradient(&f, &xn, cfg.fd_step);
        let s = linalg::sub(&xn, &x);
        let yv = linalg::sub(&gn, &g);
        let sy = linalg::dot(&s, &yv);
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..n).map(|i| linalg::dot(&hinv[i], &yv)).collect();
            let yhy = linalg::dot(&yv, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        let decrease = fx - fnew;
        x = xn;
        g = gn;
        fx = fnew;
        if decrease <= cfg.f_tol * fx.abs().max(1e-12) {
            stalls += 1;
            if stalls >= 3 {
                return Minimum {
                    x,
                    value: fx,
                    iterations: iter + 1,
                    converged: true,
                };
            }
        } else {
            stalls = 0;
        }
    }
    Minimum {
        x,
        value: fx,
        iterations: cfg.max_iter,
        converged: false,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Nelder–Mead with the standard coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    initial_step: f64,
    max_iter: usize,
    f_tol: f64,
) -> Minimum {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for iter in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() <= f_tol * (values[0].abs() + f_tol) {
            return Minimum {
                x: simplex[0].clone(),
                value: values[0],
                iterations: iter,
                converged: true,
            };
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let reflected = along(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let t = if fr < values[n] { 0.5 } else { -0.5 };
            let contracted = along(t);
            let fc = f(&contracted);
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = best
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations: max_iter,
        converged: false,
    }
}
