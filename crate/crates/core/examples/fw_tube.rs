//! Freidlin-Wentzell tube probabilities P(|sqrt(eps) W - h| < eta, |X - X^h| > alpha).
//!
//! ```bash
//! cargo run --release --example fw_tube
//! ```

use mmsde::ldp::{fw_tube_estimate, McSetup};
use mmsde::monotone_ops::MonotoneOp;
use mmsde::paths::{Control, TimeGrid};
use mmsde::solver::{Drift, ModelSpec, Scheme};

fn main() -> mmsde::Result<()> {
    let grid = TimeGrid::new(1.0, 256)?;
    let setup = McSetup {
        grid,
        scheme: Scheme::ResolventEuler,
    };
    let h = Control::constant(grid, &[1.0]);
    let models = [
        ("reflected BM", ModelSpec::reflected_bm(0.0)),
        (
            "reflected OU, x0=0.5",
            ModelSpec::driftless(MonotoneOp::halfspace(), vec![0.5])
                .with_drift(Drift::linear_scalar(-3.0)),
        ),
    ];
    for (name, model) in &models {
        println!("{name}");
        for (alpha, eta) in [(0.5, 0.2), (0.05, 0.2)] {
            for eps in [0.1, 0.05, 0.02] {
                let r = fw_tube_estimate(model, &h, alpha, eta, eps, &setup, 20_000, 3)?;
                let (lo, hi) = r.ci95();
                println!(
                    "  alpha={alpha} eta={eta} eps={eps:<5} p={:.4e} ci [{lo:.2e}, {hi:.2e}]",
                    r.estimate
                );
            }
        }
    }
    Ok(())
}
