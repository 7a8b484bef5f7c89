//! Functional LIL for reflected Brownian motion: the rescaled paths stay in
//! the half-line and approach the reflected limit set.
//!
//! ```bash
//! cargo run --release --example halfspace_flil
//! ```

use mmsde::flil::{flil_experiment, FlilConfig};
use mmsde::solver::ModelSpec;

fn main() -> mmsde::Result<()> {
    let model = ModelSpec::reflected_bm(0.0);
    let cfg = FlilConfig {
        n_max: 1 << 20,
        net_size: 128,
        ..FlilConfig::default()
    };
    let seeds = [0u64, 1, 2, 3];
    let report = flil_experiment(&model, 1.5, 32, &seeds, false, &cfg)?;
    println!(
        "net: {} members, slack {:.3}",
        report.net_members, report.net_slack
    );
    for &seed in &seeds {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.seed == seed).collect();
        let z_min = rows.iter().map(|r| r.z_min).fold(f64::INFINITY, f64::min);
        println!(
            "seed {seed}: trailing max dist {:.3}, min rescaled value {z_min:.3}",
            report.trailing_max(seed, 10)
        );
    }
    Ok(())
}
