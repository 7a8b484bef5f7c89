//! Rate function values: endpoint targets, interior paths, path tracking.
//!
//! ```bash
//! cargo run --release --example rate_function
//! ```

use mmsde::monotone_ops::{ConvexSet, MonotoneOp};
use mmsde::paths::{Path, TimeGrid};
use mmsde::rate::{rate_endpoint, rate_interior_path, rate_path, OptimizerConfig};
use mmsde::solver::{Drift, ModelSpec};

fn main() -> mmsde::Result<()> {
    let cfg = OptimizerConfig::default();
    let grid = TimeGrid::new(1.0, 64)?;
    let bm = ModelSpec::reflected_bm(0.0);
    for a in [0.5, 1.0, 2.0] {
        let r = rate_endpoint(&bm, &ConvexSet::at_least(a), &grid, &cfg)?;
        println!(
            "I(X(1) >= {a}) = {:.5}  (a^2/2 = {:.5})",
            r.value,
            a * a / 2.0
        );
    }
    let below = ConvexSet::Box {
        lo: vec![-2.0],
        hi: vec![-1.0],
    };
    println!(
        "I(X(1) in [-2,-1]) = {}",
        rate_endpoint(&bm, &below, &grid, &cfg)?.value
    );

    let ou = ModelSpec::driftless(MonotoneOp::halfspace(), vec![1.0])
        .with_drift(Drift::linear_scalar(-0.5));
    let coarse = TimeGrid::new(1.0, 16)?;
    let f = Path::scalar_fn(coarse, |t| 1.0 + 0.5 * (std::f64::consts::PI * t).sin());
    let exact = rate_interior_path(&ou, &f)?;
    let tracked = rate_path(&ou, &f, 1e-3, &cfg)?;
    println!(
        "interior path: closed form {:.5}, tracked {:.5} (residual {:.1e})",
        exact.value, tracked.value, tracked.residual
    );
    Ok(())
}
