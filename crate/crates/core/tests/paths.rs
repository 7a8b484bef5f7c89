mod common;

use common::{ks_one_sample, ks_two_sample};
use mmsde::paths::{
    cm_norm, sample_brownian, sample_brownian_keyed, sup_distance, Control, Path, TimeGrid,
};
use mmsde::rng::{Purpose, StreamKey};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn single_step_variance() {
    let t = 2.5;
    let grid = TimeGrid::new(t, 1).unwrap();
    let n = 100_000u64;
    let xs: Vec<f64> = (0..n)
        .map(|s| sample_brownian(1, &grid, s).last()[0])
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // standard error of the sample variance of a Gaussian: T·√(2/(n-1))
    let se = t * (2.0 / (n - 1) as f64).sqrt();
    assert!((var - t).abs() < 3.0 * se, "var {var}");
}

#[test]
fn fixed_seed_is_bit_identical() {
    let grid = TimeGrid::new(1.0, 96).unwrap();
    let a = sample_brownian(1, &grid, 42);
    let b = sample_brownian(1, &grid, 42);
    assert_eq!(a.flat(), b.flat());
    assert_eq!(a.node(0), &[0.0]);
}

#[test]
fn coarse_path_is_restriction_of_fine() {
    for (n0, levels) in [(1usize, 6u32), (3, 4), (5, 3)] {
        let key = StreamKey::new(9, Purpose::Brownian, 4);
        let fine = sample_brownian_keyed(2, &TimeGrid::new(1.5, n0 << levels).unwrap(), key);
        for l in 0..levels {
            let coarse = sample_brownian_keyed(2, &TimeGrid::new(1.5, n0 << l).unwrap(), key);
            let restricted = fine.restrict(1 << (levels - l)).unwrap();
            assert_eq!(coarse.flat(), restricted.flat());
        }
    }
}

#[test]
fn endpoint_is_standard_normal() {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let xs: Vec<f64> = (0..10_000)
        .map(|i| sample_brownian_keyed(1, &grid, StreamKey::new(3, Purpose::Brownian, i)).last()[0])
        .collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    assert!(ks_one_sample(xs, |x| normal.cdf(x)) > 1e-3);
}

#[test]
fn brownian_scaling_two_sample() {
    let c = 7.0;
    let unit = TimeGrid::new(1.0, 32).unwrap();
    let long = TimeGrid::new(c, 32).unwrap();
    let a: Vec<f64> = (0..10_000)
        .map(|i| sample_brownian_keyed(1, &unit, StreamKey::new(1, Purpose::Brownian, i)).last()[0])
        .collect();
    let b: Vec<f64> = (0..10_000)
        .map(|i| {
            sample_brownian_keyed(1, &long, StreamKey::new(2, Purpose::Brownian, i)).node(32)[0]
                / c.sqrt()
        })
        .collect();
    assert!(ks_two_sample(a, b) > 1e-3);
}

#[test]
fn cm_norm_examples() {
    let g1 = TimeGrid::new(1.0, 10).unwrap();
    assert!((cm_norm(&Control::constant(g1, &[-3.0])) - 3.0).abs() < 1e-12);
    assert_eq!(cm_norm(&Control::zero(g1, 2)), 0.0);
    let g2 = TimeGrid::new(2.0, 7).unwrap();
    assert!((cm_norm(&Control::constant(g2, &[1.0, 1.0])) - 2.0).abs() < 1e-12);
}

#[test]
fn sup_distance_examples() {
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let u = Path::scalar_fn(grid, |t| t);
    assert_eq!(sup_distance(&u, &u).unwrap(), 0.0);
    assert_eq!(sup_distance(&u, &Path::zeros(grid, 1)).unwrap(), 1.0);
    let s = Path::scalar_fn(grid, |t| (7.0 * t).sin());
    let top = s.flat().iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert_eq!(sup_distance(&s, &Path::zeros(grid, 1)).unwrap(), top);
    let other = Path::zeros(TimeGrid::new(1.0, 49).unwrap(), 1);
    assert!(sup_distance(&u, &other).is_err());
}

fn path_strategy() -> impl Strategy<Value = Path> {
    proptest::collection::vec(-5.0f64..5.0, 2 * 17)
        .prop_map(|v| Path::from_flat(TimeGrid::new(1.0, 16).unwrap(), 2, v).unwrap())
}

proptest! {
    #[test]
    fn sup_distance_is_a_metric(u in path_strategy(), v in path_strategy(), w in path_strategy()) {
        let duv = sup_distance(&u, &v).unwrap();
        prop_assert_eq!(duv, sup_distance(&v, &u).unwrap());
        prop_assert_eq!(sup_distance(&u, &u).unwrap(), 0.0);
        prop_assert!(duv >= 0.0);
        let slack = 1e-12 * (1.0 + duv);
        prop_assert!(duv <= sup_distance(&u, &w).unwrap() + sup_distance(&w, &v).unwrap() + slack);
    }

    #[test]
    fn cm_norm_is_homogeneous(rates in proptest::collection::vec(-10.0f64..10.0, 24), c in -50.0f64..50.0) {
        let h = Control::new(TimeGrid::new(1.3, 12).unwrap(), 2, rates).unwrap();
        let lhs = cm_norm(&h.scaled(c));
        let rhs = c.abs() * cm_norm(&h);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }
}
