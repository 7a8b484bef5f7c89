//! Strassen's functional LIL for Brownian motion.
//!
//! Simulates one long path per seed, rescales it at `u = c^j` and reports
//! the sup-distance of `Z_u` to a finite net of the limit set `{I <= 1}`.
//!
//! ```bash
//! cargo run --release --example strassen_flil
//! ```

use mmsde::flil::{flil_experiment, FlilConfig};
use mmsde::monotone_ops::MonotoneOp;
use mmsde::solver::ModelSpec;

fn main() -> mmsde::Result<()> {
    let model = ModelSpec::driftless(MonotoneOp::Zero, vec![0.0]);
    let seeds: Vec<u64> = (0..8).collect();
    let cfg = FlilConfig::default();
    let start = std::time::Instant::now();
    let report = flil_experiment(&model, 1.5, 38, &seeds, false, &cfg)?;
    println!(
        "net: {} members, slack {:.3}",
        report.net_members, report.net_slack
    );
    for &seed in &seeds {
        let tail: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.seed == seed)
            .rev()
            .take(10)
            .collect();
        let top = tail
            .iter()
            .map(|r| r.endpoint)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "seed {seed}: trailing max dist {:.3}, trailing max Z(1) {:.3}",
            report.trailing_max(seed, 10),
            top
        );
    }
    for r in report.rows.iter().filter(|r| r.seed == 0) {
        println!(
            "  j={:2} u={:10.1} dist={:.3} net={:.3} Z(1)={:+.3}",
            r.j, r.u, r.dist, r.net_dist, r.endpoint
        );
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
