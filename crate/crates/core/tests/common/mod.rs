#![allow(dead_code)]

use mmsde::monotone_ops::{ConvexSet, MonotoneGraph1D, MonotoneOp, ProxFunction};

pub struct Case {
    pub name: &'static str,
    pub op: MonotoneOp,
    pub function: Option<ProxFunction>,
    pub dim: usize,
}

fn sub(function: ProxFunction) -> MonotoneOp {
    MonotoneOp::Subdifferential { function }
}

/// One or more representatives of every operator kind.
pub fn operator_catalogue() -> Vec<Case> {
    let ball = ConvexSet::Ball {
        center: vec![1.0, -0.5],
        radius: 2.0,
    };
    let boxed = ConvexSet::Box {
        lo: vec![-1.0, 0.0, -3.0],
        hi: vec![1.0, 4.0, -2.0],
    };
    let lens = ConvexSet::Intersection {
        sets: vec![
            ball.clone(),
            ConvexSet::Box {
                lo: vec![0.0, -5.0],
                hi: vec![5.0, 0.0],
            },
        ],
    };
    let sq = ProxFunction::SquaredNorm { c: 2.0 };
    let l1 = ProxFunction::L1 { weight: 0.5 };
    let eu = ProxFunction::Euclidean { weight: 1.5 };
    let ind = ProxFunction::Indicator { set: ball.clone() };
    let piecewise = MonotoneGraph1D {
        vertices: vec![[-1.0, -2.0], [0.0, 0.0], [0.0, 1.0], [2.0, 3.0]],
        left_ray: [1.0, 0.5],
        right_ray: [0.0, 1.0],
    };
    vec![
        Case {
            name: "zero",
            op: MonotoneOp::Zero,
            function: None,
            dim: 2,
        },
        Case {
            name: "halfspace",
            op: MonotoneOp::halfspace(),
            function: None,
            dim: 2,
        },
        Case {
            name: "box",
            op: MonotoneOp::Indicator { set: boxed.clone() },
            function: Some(ProxFunction::Indicator { set: boxed }),
            dim: 3,
        },
        Case {
            name: "ball",
            op: MonotoneOp::Indicator { set: ball.clone() },
            function: None,
            dim: 2,
        },
        Case {
            name: "intersection",
            op: MonotoneOp::Indicator { set: lens },
            function: None,
            dim: 2,
        },
        Case {
            name: "squared_norm",
            op: sub(sq.clone()),
            function: Some(sq),
            dim: 3,
        },
        Case {
            name: "l1",
            op: sub(l1.clone()),
            function: Some(l1.clone()),
            dim: 2,
        },
        Case {
            name: "euclidean",
            op: sub(eu.clone()),
            function: Some(eu),
            dim: 3,
        },
        Case {
            name: "indicator_fn",
            op: sub(ind.clone()),
            function: Some(ind),
            dim: 2,
        },
        Case {
            name: "graph_indicator",
            op: MonotoneOp::Graph1d {
                graph: MonotoneGraph1D::indicator_from(-1.0),
            },
            function: None,
            dim: 1,
        },
        Case {
            name: "graph_sign",
            op: MonotoneOp::Graph1d {
                graph: MonotoneGraph1D::sign(1.0),
            },
            function: None,
            dim: 1,
        },
        Case {
            name: "graph_piecewise",
            op: MonotoneOp::Graph1d { graph: piecewise },
            function: None,
            dim: 1,
        },
        Case {
            name: "linear",
            op: MonotoneOp::Linear {
                matrix: vec![vec![2.0, 1.0], vec![-1.0, 1.0]],
            },
            function: None,
            dim: 2,
        },
        Case {
            name: "scaled_halfspace",
            op: MonotoneOp::scaled(MonotoneOp::halfspace(), 2.0, 0.5),
            function: None,
            dim: 2,
        },
        Case {
            name: "scaled_linear",
            op: MonotoneOp::scaled(MonotoneOp::linear_scalar(3.0), 0.5, 2.0),
            function: None,
            dim: 1,
        },
        Case {
            name: "sum_linear_halfspace",
            op: MonotoneOp::sum(MonotoneOp::linear_scalar(0.5), MonotoneOp::halfspace()),
            function: None,
            dim: 1,
        },
        Case {
            name: "sum_l1_linear",
            op: MonotoneOp::sum(
                sub(l1),
                MonotoneOp::Linear {
                    matrix: vec![vec![1.0, 0.5], vec![-0.5, 1.0]],
                },
            ),
            function: None,
            dim: 2,
        },
    ]
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ (-1)^{j-1} exp(-2 j² λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS p-value against a continuous CDF.
pub fn ks_one_sample(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            f64::max(f - i as f64 / n, (i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// Two-sample KS p-value.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sn = ne.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}
