use mmsde::ldp::{
    bihari_bound, fw_tube_estimate, ldp_scan, mc_probability, rho_eta, Event, McSetup,
};
use mmsde::monotone_ops::ConvexSet;
use mmsde::paths::{Control, Path, TimeGrid};
use mmsde::solver::{ModelSpec, Scheme};
use mmsde::Error;
use statrs::distribution::{ContinuousCDF, Normal};

fn exact_tail(a: f64, eps: f64) -> f64 {
    2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(a / eps.sqrt()))
}

fn bridge(steps: usize) -> McSetup {
    McSetup {
        grid: TimeGrid::new(1.0, steps).unwrap(),
        scheme: Scheme::BridgeReflection,
    }
}

#[test]
fn reflection_principle_tail() {
    let model = ModelSpec::reflected_bm(0.0);
    let event = Event::EndpointIn {
        set: ConvexSet::at_least(2.0),
    };
    let r = mc_probability(
        &model,
        1.0,
        |p: &Path| event.holds(p),
        &bridge(32),
        100_000,
        17,
    )
    .unwrap();
    let p = exact_tail(2.0, 1.0);
    assert!((p - 0.0455).abs() < 1e-4);
    assert!(
        (r.estimate - p).abs() <= 3.0 * r.std_error,
        "{} vs {p}",
        r.estimate
    );
    assert!((r.std_error - (r.estimate * (1.0 - r.estimate) / 1e5).sqrt()).abs() < 1e-15);
}

#[test]
fn trivial_events() {
    let model = ModelSpec::reflected_bm(0.0);
    let setup = bridge(8);
    assert_eq!(
        mc_probability(&model, 0.5, |_: &Path| true, &setup, 100, 1)
            .unwrap()
            .estimate,
        1.0
    );
    assert_eq!(
        mc_probability(&model, 0.5, |_: &Path| false, &setup, 100, 1)
            .unwrap()
            .estimate,
        0.0
    );
    assert!(mc_probability(&model, 0.0, |_: &Path| true, &setup, 100, 1).is_err());
    assert!(mc_probability(&model, 0.5, |_: &Path| true, &setup, 0, 1).is_err());
}

#[test]
fn mc_consistency_over_cells() {
    let model = ModelSpec::reflected_bm(0.0);
    let setup = bridge(16);
    let n = 20_000;
    let mut misses = 0;
    let mut cell = 0;
    for eps in [1.0, 0.6, 0.4, 0.25, 0.15] {
        for a in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
            let p = exact_tail(a, eps);
            if p < 10.0 / n as f64 {
                continue;
            }
            let event = Event::EndpointIn {
                set: ConvexSet::at_least(a),
            };
            let r = mc_probability(
                &model,
                eps,
                |x: &Path| event.holds(x),
                &setup,
                n,
                1000 + cell,
            )
            .unwrap();
            cell += 1;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            if (r.estimate - p).abs() > 4.0 * se {
                misses += 1;
            }
        }
    }
    assert!(cell >= 45, "{cell} cells");
    assert!(
        misses <= 1,
        "{misses} of {cell} cells outside 4 standard errors"
    );
}

#[test]
fn scan_edge_cases() {
    let model = ModelSpec::reflected_bm(0.0);
    let setup = bridge(8);
    let eps = [0.2, 0.1, 0.05];
    let always = ldp_scan(&model, |_: &Path| true, &eps, &setup, 200, 3).unwrap();
    assert!(always.rows.iter().all(|r| r.eps_log_p == Some(0.0)));

    let never = Event::EndpointIn {
        set: ConvexSet::at_most(-1.0),
    };
    let scan = ldp_scan(&model, |p: &Path| never.holds(p), &eps, &setup, 200, 3).unwrap();
    assert!(scan.all_zero_hits());
    for row in &scan.rows {
        assert!(row.eps_log_p.is_none());
        let cp = row.cp_upper.unwrap();
        assert!((1.0 - cp).powi(200) - 0.025 < 1e-12);
    }
    assert!(ldp_scan(&model, |_: &Path| true, &[0.1, 0.2], &setup, 10, 0).is_err());
}

#[test]
fn tube_edge_cases() {
    let model = ModelSpec::reflected_bm(0.0);
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let setup = McSetup {
        grid,
        scheme: Scheme::ResolventEuler,
    };
    let zero = Control::zero(TimeGrid::new(1.0, 4).unwrap(), 1);
    assert_eq!(
        fw_tube_estimate(&model, &zero, 1e3, 0.5, 0.1, &setup, 2000, 1)
            .unwrap()
            .estimate,
        0.0
    );
    let unit = Control::constant(TimeGrid::new(1.0, 4).unwrap(), &[1.0]);
    assert_eq!(
        fw_tube_estimate(&model, &unit, 0.1, 0.0, 0.1, &setup, 2000, 1)
            .unwrap()
            .estimate,
        0.0
    );
    assert!(fw_tube_estimate(&model, &unit, 0.0, 0.2, 0.1, &setup, 10, 1).is_err());
}

#[test]
fn rho_eta_formula_cases() {
    assert!((rho_eta(0.05, 0.1).unwrap() - 0.05 * 20f64.ln()).abs() < 1e-15);
    assert!((rho_eta(0.05, 0.1).unwrap() - 0.149787).abs() < 1e-6);
    assert!((rho_eta(0.2, 0.1).unwrap() - 0.360517).abs() < 1e-6);
    let eta: f64 = 0.1;
    let left = eta * (1.0 / eta).ln();
    assert!((rho_eta(eta, eta).unwrap() - left).abs() < 1e-15);
    assert!(matches!(rho_eta(0.1, 0.5), Err(Error::BadEta(_))));
    assert!(matches!(rho_eta(0.1, 0.0), Err(Error::BadEta(_))));
}

#[test]
fn rho_eta_shape() {
    for eta in [1e-3, 0.01, 0.1, 0.3] {
        let h = 1e-3;
        let xs: Vec<f64> = (1..2000).map(|i| i as f64 * h).collect();
        let v: Vec<f64> = xs.iter().map(|&x| rho_eta(x, eta).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        assert!(v.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-8));
    }
    for &x in &[1e-4, 0.01, 0.05, 0.2, 1.0, 3.0] {
        assert!(rho_eta(x, 0.2).unwrap() <= rho_eta(x, 0.05).unwrap() + 1e-15);
    }
}

#[test]
fn bihari_cases() {
    let q = Path::scalar_fn(TimeGrid::new(2.0, 400).unwrap(), |_| 1.0);
    assert!((bihari_bound(0.01, &q, 2f64.ln()).unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(bihari_bound(0.3, &q, 0.0).unwrap(), 0.3);
    let zero = Path::zeros(TimeGrid::new(1.0, 10).unwrap(), 1);
    assert_eq!(bihari_bound(0.3, &zero, 0.7).unwrap(), 0.3);
    assert!(matches!(
        bihari_bound(1.5, &zero, 0.5),
        Err(Error::BadG0(_))
    ));
}
