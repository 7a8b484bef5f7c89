//! Small-noise scan of P(X(1) >= 1) for reflected Brownian motion against
//! the exact tail 2(1 - Phi(1/sqrt(eps))).
//!
//! ```bash
//! cargo run --release --example ldp_scan
//! ```

use mmsde::ldp::{ldp_scan, Event, McSetup};
use mmsde::monotone_ops::ConvexSet;
use mmsde::paths::{Path, TimeGrid};
use mmsde::solver::{ModelSpec, Scheme};

fn main() -> mmsde::Result<()> {
    let model = ModelSpec::reflected_bm(0.0);
    let setup = McSetup {
        grid: TimeGrid::new(1.0, 64)?,
        scheme: Scheme::BridgeReflection,
    };
    let event = Event::EndpointIn {
        set: ConvexSet::at_least(1.0),
    };
    let scan = ldp_scan(
        &model,
        |p: &Path| event.holds(p),
        &[0.4, 0.2, 0.1, 0.05],
        &setup,
        200_000,
        1,
    )?;
    println!(
        "{:>8} {:>12} {:>10} {:>10}",
        "epsilon", "phat", "eps log p", "ci"
    );
    for r in &scan.rows {
        match r.eps_log_p {
            Some(v) => println!(
                "{:>8} {:>12.4e} {:>10.4} [{:.4}, {:.4}]",
                r.epsilon, r.phat, v, r.ci_lo, r.ci_hi
            ),
            None => println!(
                "{:>8} {:>12} (no hits, p <= {:.2e})",
                r.epsilon,
                0,
                r.cp_upper.unwrap_or(f64::NAN)
            ),
        }
    }
    if let Some(b) = scan.trend_intercept {
        println!("linear trend intercept {b:.4} (rate value 0.5)");
    }
    Ok(())
}
