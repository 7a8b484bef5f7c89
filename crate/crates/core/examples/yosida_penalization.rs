//! Penalised (Yosida) solutions converge to the reflected one as alpha -> 0.
//!
//! ```bash
//! cargo run --release --example yosida_penalization
//! ```

use mmsde::paths::{sample_brownian, sup_distance, TimeGrid};
use mmsde::solver::{simulate, simulate_yosida, ModelSpec, Noise};

fn main() -> mmsde::Result<()> {
    let grid = TimeGrid::new(1.0, 4096)?;
    let model = ModelSpec::reflected_bm(0.0);
    let alphas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let paths = 16;
    let mut mean = vec![0.0; alphas.len()];
    for seed in 0..paths {
        let w = sample_brownian(1, &grid, seed);
        let exact = simulate(&model, 1.0, None, Noise::Path(&w), &grid)?;
        for (k, &alpha) in alphas.iter().enumerate() {
            let pen = simulate_yosida(&model, alpha, 1.0, None, Noise::Path(&w), &grid)?;
            mean[k] += sup_distance(&exact.x, &pen)? / paths as f64;
        }
    }
    for (alpha, d) in alphas.iter().zip(&mean) {
        println!("alpha={alpha:<6} mean sup-dist {d:.4}");
    }
    Ok(())
}
