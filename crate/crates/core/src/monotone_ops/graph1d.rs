use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A maximal monotone graph on ℝ given as a monotone polygonal curve in the
/// `(y, a)` plane: vertices nondecreasing in both coordinates, extended by
/// two rays. A vertical segment (`dy = 0`) encodes a multivalued point; a
/// vertical ray encodes a domain bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneGraph1D {
    pub vertices: Vec<[f64; 2]>,
    /// Direction followed backwards from the first vertex.
    pub left_ray: [f64; 2],
    /// Direction followed forwards from the last vertex.
    pub right_ray: [f64; 2],
}

impl MonotoneGraph1D {
    /// ∂I_{[lo, ∞)} as a graph.
    pub fn indicator_from(lo: f64) -> Self {
        Self {
            vertices: vec![[lo, 0.0]],
            left_ray: [0.0, 1.0],
            right_ray: [1.0, 0.0],
        }
    }

    /// The sign graph scaled by `weight` (subdifferential of `weight·|y|`).
    pub fn sign(weight: f64) -> Self {
        Self {
            vertices: vec![[0.0, -weight], [0.0, weight]],
            left_ray: [1.0, 0.0],
            right_ray: [1.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::NoResolvent(format!("invalid 1-D graph: {msg}")));
        if self.vertices.is_empty() {
            return bad("no vertices");
        }
        for w in self.vertices.windows(2) {
            if w[1][0] < w[0][0] || w[1][1] < w[0][1] {
                return bad("vertices are not monotone");
            }
        }
        for ray in [self.left_ray, self.right_ray] {
            if ray[0] < 0.0 || ray[1] < 0.0 || (ray[0] == 0.0 && ray[1] == 0.0) {
                return bad("ray directions must be nonnegative and nonzero");
            }
        }
        if self.vertices.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite vertex");
        }
        Ok(())
    }

    /// Solves `y + alpha·a = x` for `(y, a)` on the graph.
    pub fn solve(&self, alpha: f64, x: f64) -> Result<(f64, f64)> {
        self.validate()?;
        let g = |p: [f64; 2]| p[0] + alpha * p[1];
        let first = self.vertices[0];
        let last = *self.vertices.last().unwrap();
        if x <= g(first) {
            let rate = self.left_ray[0] + alpha * self.left_ray[1];
            let t = (g(first) - x) / rate;
            return Ok((
                first[0] - t * self.left_ray[0],
                first[1] - t * self.left_ray[1],
            ));
        }
        if x >= g(last) {
            let rate = self.right_ray[0] + alpha * self.right_ray[1];
            let t = (x - g(last)) / rate;
            return Ok((
                last[0] + t * self.right_ray[0],
                last[1] + t * self.right_ray[1],
            ));
        }
        for w in self.vertices.windows(2) {
            let (g0, g1) = (g(w[0]), g(w[1]));
            if x >= g0 && x <= g1 && g1 > g0 {
                let s = (x - g0) / (g1 - g0);
                return Ok((
                    w[0][0] + s * (w[1][0] - w[0][0]),
                    w[0][1] + s * (w[1][1] - w[0][1]),
                ));
            }
        }
        Err(Error::NoResolvent(format!(
            "1-D graph inclusion has no solution at x = {x}"
        )))
    }

    /// Closure of the domain as `(lo, hi)` with infinite ends allowed.
    pub fn domain_bounds(&self) -> (f64, f64) {
        let lo = if self.left_ray[0] == 0.0 {
            self.vertices[0][0]
        } else {
            f64::NEG_INFINITY
        };
        let hi = if self.right_ray[0] == 0.0 {
            self.vertices.last().unwrap()[0]
        } else {
            f64::INFINITY
        };
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_graph_resolvent_is_projection() {
        let g = MonotoneGraph1D::indicator_from(0.0);
        for x in [-3.0, -0.1, 0.0, 0.5, 4.0] {
            let (y, a) = g.solve(0.7, x).unwrap();
            assert!((y - x.max(0.0)).abs() < 1e-15);
            assert!((a - x.min(0.0) / 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_graph_is_soft_threshold() {
        let g = MonotoneGraph1D::sign(1.0);
        let cases = [(-3.0, -2.5), (-0.2, 0.0), (0.4, 0.0), (2.0, 1.5)];
        for (x, want) in cases {
            let (y, _) = g.solve(0.5, x).unwrap();
            assert!((y - want).abs() < 1e-14, "x={x} y={y}");
        }
    }

    #[test]
    fn invalid_graph_is_rejected() {
        let g = MonotoneGraph1D {
            vertices: vec![[0.0, 1.0], [1.0, 0.0]],
            left_ray: [1.0, 0.0],
            right_ray: [1.0, 0.0],
        };
        assert!(matches!(g.solve(1.0, 0.0), Err(Error::NoResolvent(_))));
    }
}
