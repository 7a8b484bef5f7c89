use serde::{Deserialize, Serialize};

use crate::linalg;

const DYKSTRA_MAX_ITER: usize = 10_000;
const DYKSTRA_TOL: f64 = 1e-13;

/// Closed convex subset of ℝ^m with an exact (or Dykstra-certified) projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSet {
    /// `{x : x[axis] >= 0}`.
    HalfSpace {
        axis: usize,
    },
    /// Componentwise `lo <= x <= hi`; infinite bounds are allowed.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Projection by Dykstra's alternating scheme.
    Intersection {
        sets: Vec<ConvexSet>,
    },
}

impl ConvexSet {
    /// ℝ₊ on the first coordinate.
    pub fn nonnegative() -> Self {
        ConvexSet::HalfSpace { axis: 0 }
    }

    /// `{x in ℝ : x >= a}`.
    pub fn at_least(a: f64) -> Self {
        ConvexSet::Box {
            lo: vec![a],
            hi: vec![f64::INFINITY],
        }
    }

    /// `{x in ℝ : x <= a}`.
    pub fn at_most(a: f64) -> Self {
        ConvexSet::Box {
            lo: vec![f64::NEG_INFINITY],
            hi: vec![a],
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.project_into(&mut y);
        y
    }

    pub fn project_into(&self, x: &mut [f64]) {
        match self {
            ConvexSet::HalfSpace { axis } => {
                if x[*axis] < 0.0 {
                    x[*axis] = 0.0;
                }
            }
            ConvexSet::Box { lo, hi } => {
                for ((xi, l), h) in x.iter_mut().zip(lo).zip(hi) {
                    *xi = xi.max(*l).min(*h);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let d = linalg::dist(x, center);
                if d > *radius {
                    let s = radius / d;
                    for (xi, ci) in x.iter_mut().zip(center) {
                        *xi = ci + s * (*xi - ci);
                    }
                }
            }
            ConvexSet::Intersection { sets } => dykstra(sets, x),
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        linalg::dist(x, &self.project(x))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// Distance from a point of the set to its topological boundary.
    /// Points outside the set report 0. For intersections this is the
    /// minimum over components, which is exact for interior points.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        if !self.contains(x, 0.0) {
            return 0.0;
        }
        match self {
            ConvexSet::HalfSpace { axis } => x[*axis],
            ConvexSet::Box { lo, hi } => x
                .iter()
                .zip(lo)
                .zip(hi)
                .map(|((xi, l), h)| (xi - l).min(h - xi))
                .fold(f64::INFINITY, f64::min),
            ConvexSet::Ball { center, radius } => radius - linalg::dist(x, center),
            ConvexSet::Intersection { sets } => sets
                .iter()
                .map(|s| s.boundary_distance(x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// The image `{y / d : y in C}` for a dilation `d > 0`.
    pub fn dilate_inverse(&self, d: f64) -> ConvexSet {
        match self {
            ConvexSet::HalfSpace { axis } => ConvexSet::HalfSpace { axis: *axis },
            ConvexSet::Box { lo, hi } => ConvexSet::Box {
                lo: lo.iter().map(|v| v / d).collect(),
                hi: hi.iter().map(|v| v / d).collect(),
            },
            ConvexSet::Ball { center, radius } => ConvexSet::Ball {
                center: center.iter().map(|v| v / d).collect(),
                radius: radius / d,
            },
            ConvexSet::Intersection { sets } => ConvexSet::Intersection {
                sets: sets.iter().map(|s| s.dilate_inverse(d)).collect(),
            },
        }
    }

    /// Dimension implied by the description, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexSet::HalfSpace { .. } => None,
            ConvexSet::Box { lo, .. } => Some(lo.len()),
            ConvexSet::Ball { center, .. } => Some(center.len()),
            ConvexSet::Intersection { sets } => sets.iter().find_map(|s| s.dim()),
        }
    }

    pub fn is_nonempty_description(&self) -> bool {
        match self {
            ConvexSet::HalfSpace { .. } => true,
            ConvexSet::Box { lo, hi } => {
                lo.len() == hi.len() && lo.iter().zip(hi).all(|(l, h)| l <= h)
            }
            ConvexSet::Ball { radius, .. } => *radius >= 0.0,
            ConvexSet::Intersection { sets } => !sets.is_empty(),
        }
    }
}

fn dykstra(sets: &[ConvexSet], x: &mut [f64]) {
    if sets.is_empty() {
        return;
    }
    if sets.len() == 1 {
        sets[0].project_into(x);
        return;
    }
    let m = x.len();
    let mut increments = vec![vec![0.0; m]; sets.len()];
    let mut y = x.to_vec();
    for _ in 0..DYKSTRA_MAX_ITER {
        let prev = y.clone();
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let mut z: Vec<f64> = y.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let before = z.clone();
            set.project_into(&mut z);
            for i in 0..m {
                inc[i] = before[i] - z[i];
            }
            y = z;
        }
        if linalg::dist(&y, &prev) < DYKSTRA_TOL {
            break;
        }
    }
    x.copy_from_slice(&y);
}
