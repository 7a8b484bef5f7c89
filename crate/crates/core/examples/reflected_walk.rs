//! Reflected Brownian motion on the half-line: the resolvent Euler walk
//! against the Skorohod map of the free walk, and the regulator K.
//!
//! ```bash
//! cargo run --example reflected_walk
//! ```

use mmsde::monotone_ops::ConvexSet;
use mmsde::paths::{sample_brownian, sup_distance, TimeGrid};
use mmsde::solver::{boundary_support_check, reflect_halfspace, simulate, ModelSpec, Noise};

fn main() -> mmsde::Result<()> {
    let grid = TimeGrid::new(1.0, 1000)?;
    let model = ModelSpec::reflected_bm(0.2);
    let w = sample_brownian(1, &grid, 42);
    let sol = simulate(&model, 1.0, None, Noise::Path(&w), &grid)?;
    let gamma = reflect_halfspace(&w.map(|v| v + 0.2));
    println!(
        "sup |X - Gamma(x0 + W)| = {:.2e}",
        sup_distance(&sol.x, &gamma)?
    );

    let support = boundary_support_check(&sol, &ConvexSet::nonnegative());
    println!(
        "regulator mass {:.4}, off-boundary {:.1e}: {}",
        support.total_mass,
        support.interior_mass,
        if support.pass { "PASS" } else { "FAIL" }
    );
    for n in (0..=1000).step_by(100) {
        println!(
            "  t={:.1} W={:+.4} X={:.4} K={:+.4}",
            grid.time(n),
            w.node(n)[0],
            sol.x.node(n)[0],
            sol.k.node(n)[0]
        );
    }
    Ok(())
}
