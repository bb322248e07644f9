mod common;

use covext::simulate::filter_field;
use covext::{
    biased_cov, default_system, inner_product, simulate_field, true_covariances, Arma2D, Error, GridSpec,
    HermitianSeq, IndexSet,
};

fn truth(sys: &Arma2D, lam: &IndexSet, n: usize) -> HermitianSeq {
    true_covariances(sys, lam, &GridSpec::uniform(2, n, false).unwrap()).unwrap()
}

#[test]
fn default_coefficients() {
    let sys = default_system();
    assert_eq!(sys.b[0][0], 0.9);
    assert_eq!(sys.b[0][2], 0.05);
    assert_eq!(sys.a[2][0], 0.4);
    assert_eq!(sys.a[0][0], 1.0);
    let sb: f64 = sys.b.iter().flatten().sum();
    let sa: f64 = sys.a.iter().flatten().sum();
    assert!((sys.spectrum_at(&[0.0, 0.0]) - (sb * sb) / (sa * sa)).abs() < 1e-14);
}

#[test]
fn invalid_systems_are_rejected() {
    assert!(Arma2D::new("x", vec![vec![1.0]], vec![vec![2.0]]).is_err());
    assert!(Arma2D::new("x", vec![vec![1.0], vec![]], vec![vec![1.0]]).is_err());
}

#[test]
fn zero_noise_gives_zero_field() {
    let y = filter_field(&default_system(), 16, &[0.0; 256]).unwrap();
    assert!(y.real_values().iter().all(|&v| v == 0.0));
}

#[test]
fn fixed_seed_is_reproducible() {
    let a = simulate_field(&default_system(), 40, 17).unwrap();
    let b = simulate_field(&default_system(), 40, 17).unwrap();
    let c = simulate_field(&default_system(), 40, 18).unwrap();
    assert_eq!(a.real_values(), b.real_values());
    assert_ne!(a.real_values(), c.real_values());
}

#[test]
fn unstable_recursion_is_reported() {
    let sys = Arma2D::new("runaway", vec![vec![1.0]], vec![vec![1.0, -2.0]]).unwrap();
    match simulate_field(&sys, 600, 0) {
        Err(Error::Unstable(msg)) => assert!(msg.contains("runaway")),
        other => panic!("expected instability, got {other:?}"),
    }
}

#[test]
fn sample_variance_matches_spectral_integral() {
    let sys = default_system();
    let lam = IndexSet::boxed(&[0, 0]).unwrap();
    let c0 = truth(&sys, &lam, 128).dc();
    let y = simulate_field(&sys, 500, 2024).unwrap();
    let v = biased_cov(&y, &lam).unwrap().dc();
    assert!((v / c0 - 1.0).abs() < 0.05, "{v} vs {c0}");
}

#[test]
fn true_covariance_examples() {
    let lam = IndexSet::boxed(&[2, 2]).unwrap();
    let flat = Arma2D::new("flat", vec![vec![1.0, 0.3]], vec![vec![1.0, 0.3]]).unwrap();
    assert!(truth(&flat, &lam, 32).sub(&HermitianSeq::unit(lam.clone())).unwrap().norm() < 1e-14);

    let sys = default_system();
    let c = truth(&sys, &lam, 64);
    assert!(c.dc() > 0.0);
    let mut r = common::rng(8);
    for _ in 0..100 {
        let p = common::random_positive_poly(&mut r, &lam, 1e-3);
        assert!(inner_product(&c, &p).unwrap() > 0.0);
    }
    let finer = truth(&sys, &lam, 128);
    assert!(c.sub(&finer).unwrap().max_abs() < 1e-8);
}

#[test]
fn biased_estimates_approach_the_truth_with_record_length() {
    let sys = default_system();
    let lam = IndexSet::boxed(&[2, 2]).unwrap();
    let c = truth(&sys, &lam, 128);
    let errors: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            let errs: Vec<f64> = (0..12)
                .map(|s| {
                    let y = simulate_field(&sys, n, 1000 + s).unwrap();
                    biased_cov(&y, &lam).unwrap().sub(&c).unwrap().norm()
                })
                .collect();
            common::mean_and_se(&errs).0
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}
