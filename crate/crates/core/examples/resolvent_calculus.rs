//! Resolvents, Yosida approximations and Moreau envelopes for a few operators,
//! plus the randomized property suite.
//!
//! ```bash
//! cargo run --example resolvent_calculus
//! ```

use mmsde::monotone_ops::{
    minimal_section, moreau_envelope, property_suite, ConvexSet, MonotoneGraph1D, MonotoneOp,
    ProxFunction,
};

fn main() -> mmsde::Result<()> {
    let l1 = ProxFunction::L1 { weight: 1.0 };
    let ball = ConvexSet::Ball {
        center: vec![0.0, 0.0],
        radius: 1.0,
    };
    let ops = [
        (
            "normal cone of unit ball",
            MonotoneOp::Indicator { set: ball },
            None,
        ),
        (
            "subdifferential of |x|_1",
            MonotoneOp::Subdifferential {
                function: l1.clone(),
            },
            Some(l1),
        ),
        (
            "rotation + |x|_1",
            MonotoneOp::sum(
                MonotoneOp::Linear {
                    matrix: vec![vec![0.0, 1.0], vec![-1.0, 0.0]],
                },
                MonotoneOp::Subdifferential {
                    function: ProxFunction::L1 { weight: 0.5 },
                },
            ),
            None,
        ),
    ];
    let x = [2.0, -0.3];
    for (name, op, f) in &ops {
        println!("{name}");
        for alpha in [1.0, 0.1, 0.01] {
            let j = op.resolvent(alpha, &x)?;
            let a = op.yosida(alpha, &x)?;
            print!("  alpha={alpha:<5} J={j:.4?} A^alpha={a:.4?}");
            if let Some(f) = f {
                print!(" envelope={:.4}", moreau_envelope(f, alpha, &x)?);
            }
            println!();
        }
        let report = property_suite(op, f.as_ref(), 2, 1000, 7)?;
        println!(
            "  property suite: {} (nonexpansive slack {:.1e}, monotonicity slack {:.1e})",
            if report.pass { "PASS" } else { "FAIL" },
            report.nonexpansive_slack,
            report.monotonicity_slack
        );
    }

    let sign = MonotoneOp::Graph1d {
        graph: MonotoneGraph1D::sign(1.0),
    };
    for x in [-1.0, 0.0, 0.5] {
        println!(
            "minimal section of sign graph at {x}: {:?}",
            minimal_section(&sign, &[x])?
        );
    }
    Ok(())
}
