use mmsde::monotone_ops::{ConvexSet, MonotoneOp};
use mmsde::paths::{Control, Path, TimeGrid};
use mmsde::rate::{
    energy, rate_endpoint, rate_interior_path, rate_path, rate_plus_halfspace, skeleton,
    skeleton_hat, OptimizerConfig,
};
use mmsde::rng::{Purpose, StreamKey};
use mmsde::solver::{reflect_halfspace, Diffusion, Drift, ModelSpec};

fn smooth_path(grid: TimeGrid, x0: f64, seed: u64) -> Path {
    let mut s = StreamKey::new(seed, Purpose::OptimizerRestart, 77).stream();
    let coef: Vec<f64> = (0..3).map(|_| 0.3 * s.normal()).collect();
    Path::scalar_fn(grid, |t| {
        x0 + coef
            .iter()
            .enumerate()
            .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * t / 2.0).sin())
            .sum::<f64>()
    })
}

#[test]
fn interior_formula_matches_hand_energy() {
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let model = ModelSpec::driftless(MonotoneOp::Zero, vec![0.0]);
    let f = smooth_path(grid, 0.0, 1);
    let by_hand: f64 = (0..32)
        .map(|n| {
            let v = (f.node(n + 1)[0] - f.node(n)[0]) / grid.dt();
            0.5 * v * v * grid.dt()
        })
        .sum();
    let r = rate_interior_path(&model, &f).unwrap();
    assert!((r.value - by_hand).abs() < 1e-12);
    assert!(r.residual < 1e-12);
}

#[test]
fn minimizer_energy_equals_value() {
    let model = ModelSpec::reflected_bm(0.0);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let r = rate_endpoint(
        &model,
        &ConvexSet::at_least(0.7),
        &grid,
        &OptimizerConfig::default(),
    )
    .unwrap();
    let h = r.minimizer.as_ref().unwrap();
    assert!((energy(h) - r.value).abs() < 1e-9);
    assert!(r.residual <= 1e-6);
}

#[test]
fn nested_targets_never_increase_value() {
    let model = ModelSpec::reflected_bm(0.0).with_drift(Drift::Constant { value: vec![-0.3] });
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let cfg = OptimizerConfig::default();
    let mut prev = f64::INFINITY;
    for lo in [1.5, 1.0, 0.5] {
        let v = rate_endpoint(&model, &ConvexSet::at_least(lo), &grid, &cfg)
            .unwrap()
            .value;
        assert!(v <= prev + 1e-6, "lo={lo}: {v} > {prev}");
        prev = v;
    }
}

#[test]
fn path_tracking_agrees_with_interior_formula() {
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let model = ModelSpec::driftless(MonotoneOp::halfspace(), vec![1.0])
        .with_drift(Drift::linear_scalar(-0.5))
        .with_diffusion(1, Diffusion::scalar(0.8));
    for seed in 0..3 {
        let f = smooth_path(grid, 1.0, seed);
        let exact = rate_interior_path(&model, &f).unwrap().value;
        let tracked = rate_path(&model, &f, 1e-3, &OptimizerConfig::default()).unwrap();
        assert!(tracked.residual <= 1e-3);
        assert!(
            (tracked.value - exact).abs() <= 1e-2,
            "seed {seed}: {} vs {exact}",
            tracked.value
        );
    }
}

#[test]
fn skeleton_is_gamma_of_free_skeleton() {
    let model = ModelSpec::driftless(MonotoneOp::halfspace(), vec![0.0, 0.0])
        .with_drift(Drift::Affine {
            offset: vec![-0.4, 0.1],
            matrix: vec![vec![0.0, 0.3], vec![0.0, -0.2]],
        })
        .with_diffusion(2, Diffusion::identity(2));
    let grid = TimeGrid::new(1.0, 64).unwrap();
    for seed in 0..20u64 {
        let mut s = StreamKey::new(seed, Purpose::OptimizerRestart, 1).stream();
        let rates: Vec<f64> = (0..128).map(|_| 2.0 * s.normal()).collect();
        let h = Control::new(grid, 2, rates).unwrap();
        let constrained = skeleton(&model, &h).unwrap();
        let free = reflect_halfspace(&skeleton_hat(&model, &h).unwrap());
        let d = mmsde::paths::sup_distance(&constrained, &free).unwrap();
        assert!(d <= 1e-10, "seed {seed}: {d}");
    }
}

#[test]
fn plus_rate_matches_constrained_rate_on_interior_paths() {
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let model = ModelSpec::driftless(MonotoneOp::halfspace(), vec![0.5]);
    let f = Path::scalar_fn(grid, |t| 0.5 + t * t);
    let plus = rate_plus_halfspace(&model, &f).unwrap().value;
    let inner = rate_interior_path(&model, &f).unwrap().value;
    assert!((plus - inner).abs() < 1e-12);
}
