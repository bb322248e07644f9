mod common;

use covext::wiener::{
    filter_power, latent_covariances, threshold_from_mean, Filter, IdentifyConfig, DEFAULT_TEXTURE_LAMBDA,
};
use covext::{
    default_system, estimate_threshold, factorize_spectrum, identify, price_forward, price_inverse,
    synthesize_texture, DataRecord, GridField, GridSpec, HermitianSeq, IndexSet, WeightMatrix, WienerModel,
};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

#[test]
fn threshold_examples() {
    assert!(threshold_from_mean(0.5).unwrap().abs() < 1e-12);
    assert!((threshold_from_mean(0.158655).unwrap() - 1.0).abs() < 1e-5);
    assert!((threshold_from_mean(0.841345).unwrap() + 1.0).abs() < 1e-5);
    let ones = DataRecord::from_real(vec![2, 2], vec![1.0; 4]).unwrap();
    let zeros = DataRecord::from_real(vec![2, 2], vec![0.0; 4]).unwrap();
    assert!(estimate_threshold(&ones).is_err());
    assert!(estimate_threshold(&zeros).is_err());
    let half = DataRecord::from_real(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert!(estimate_threshold(&half).unwrap().abs() < 1e-12);
}

#[test]
fn price_examples() {
    assert_eq!(price_forward(0.0, 0.7).unwrap(), 0.0);
    assert!((price_forward(1.0, 0.0).unwrap() - 0.25).abs() < 1e-10);
    assert!((price_forward(0.5, 0.0).unwrap() - 1.0 / 12.0).abs() < 1e-10);
    assert!(price_forward(1.01, 0.0).is_err());

    assert_eq!(price_inverse(0.0, 1.3).unwrap(), 0.0);
    assert!((price_inverse(1.0 / 12.0, 0.0).unwrap() - 0.5).abs() < 1e-8);
    assert!(price_inverse(0.3, 0.0).is_err());
}

#[test]
fn price_forward_endpoints_match_binary_moments() {
    // Fully (anti)correlated latent fields give c_y = m - m² and -m² for
    // τ ≥ 0, where m is the binary mean.
    for tau in [0.0, 1e-6, 1e-3, 0.01, 0.5, 1.0, 3.0] {
        let m = 1.0 - Normal::new(0.0, 1.0).unwrap().cdf(tau);
        assert!((price_forward(1.0, tau).unwrap() - (m - m * m)).abs() < 1e-10, "τ {tau}");
        assert!((price_forward(-1.0, tau).unwrap() + m * m).abs() < 1e-10, "τ {tau}");
    }
}

#[test]
fn price_forward_slope_at_origin() {
    for tau in [0.0, 0.5, 1.0, 2.0] {
        let h = 1e-5;
        let fd = (price_forward(h, tau).unwrap() - price_forward(-h, tau).unwrap()) / (2.0 * h);
        let want = (-tau * tau).exp() / (2.0 * PI);
        assert!((fd - want).abs() < 1e-8 * (1.0 + want), "τ {tau}: {fd} vs {want}");
    }
}

#[test]
fn factorize_constant_spectrum() {
    let f = factorize_spectrum(&GridField::constant(GridSpec::uniform(1, 32, false).unwrap(), 4.0)).unwrap();
    assert!((f.at(&[0]) - 2.0).abs() < 1e-12);
    assert!(f.coeffs.iter().skip(1).all(|v| v.abs() < 1e-12));
}

#[test]
fn factorize_recovers_minimum_phase_factor() {
    let grid = GridSpec::uniform(1, 256, false).unwrap();
    let phi = GridField::from_fn(grid, |t| 1.25 - t[0].cos()).unwrap();
    let f = factorize_spectrum(&phi).unwrap();
    assert!((f.at(&[0]) - 1.0).abs() < 1e-6, "{}", f.at(&[0]));
    assert!((f.at(&[1]) + 0.5).abs() < 1e-6, "{}", f.at(&[1]));
    assert!(f.coeffs.iter().enumerate().filter(|(i, _)| *i > 1).all(|(_, v)| v.abs() < 1e-6));
}

#[test]
fn factorize_reconstructs_two_dimensional_spectrum() {
    let sys = default_system();
    let grid = GridSpec::uniform(2, 64, false).unwrap();
    let phi = GridField::from_fn(grid, |t| sys.spectrum_at(t)).unwrap();
    let f = factorize_spectrum(&phi).unwrap();
    let back = filter_power(&f).unwrap();
    let worst = phi.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs() / a).fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn factorize_rejects_bad_input() {
    let grid = GridSpec::uniform(1, 8, false).unwrap();
    assert!(factorize_spectrum(&GridField::from_fn(grid, |t| t[0].cos()).unwrap()).is_err());
    let offset = GridSpec::uniform(1, 8, true).unwrap();
    assert!(factorize_spectrum(&GridField::constant(offset, 1.0)).is_err());
}

fn model_with_filter(tau: f64, dims: Vec<usize>, taps: &[(Vec<i64>, f64)]) -> WienerModel {
    let total: usize = dims.iter().product();
    let mut coeffs = vec![0.0; total];
    for (n, v) in taps {
        let mut flat = 0;
        for (k, d) in n.iter().zip(&dims) {
            flat = flat * d + k.rem_euclid(*d as i64) as usize;
        }
        coeffs[flat] = *v;
    }
    let mut filter = Filter { dims, coeffs };
    let e = filter.energy().sqrt();
    filter.coeffs.iter_mut().for_each(|v| *v /= e);
    let lam = IndexSet::boxed(&[1, 1]).unwrap();
    WienerModel { tau, p: HermitianSeq::unit(lam.clone()), q: HermitianSeq::unit(lam.clone()), c_x: HermitianSeq::unit(lam), filter }
}

#[test]
fn synthesis_examples() {
    let m = model_with_filter(10.0, vec![8, 8], &[(vec![0, 0], 1.0), (vec![1, 0], 0.5)]);
    let y = synthesize_texture(&m, &[64, 64], 1).unwrap();
    assert!(y.real_values().iter().all(|&v| v == 0.0));

    let m = model_with_filter(0.0, vec![8, 8], &[(vec![0, 0], 1.0), (vec![1, 0], 0.5), (vec![0, 1], -0.3)]);
    let y = synthesize_texture(&m, &[500, 500], 2).unwrap();
    assert!((y.mean().re - 0.5).abs() < 0.01, "{}", y.mean().re);

    let a = synthesize_texture(&m, &[32, 40], 3).unwrap();
    let b = synthesize_texture(&m, &[32, 40], 3).unwrap();
    assert_eq!(a.real_values(), b.real_values());
    assert_eq!(a.dims(), &[32, 40]);
}

#[test]
fn identify_thresholded_white_noise() {
    let mut r = common::rng(21);
    let vals: Vec<f64> = (0..128 * 128).map(|_| if common::normal(&mut r) > 0.0 { 1.0 } else { 0.0 }).collect();
    let y = DataRecord::from_real(vec![128, 128], vals).unwrap();
    let lam = IndexSet::boxed(&[1, 1]).unwrap();
    let w = WeightMatrix::scalar(lam.len(), DEFAULT_TEXTURE_LAMBDA).unwrap();
    let m = identify(&y, &lam, &w, &IdentifyConfig::default()).unwrap();
    assert!(m.tau.abs() < 0.02, "{}", m.tau);
    let z = lam.zero_position();
    for (i, v) in m.q.values().iter().enumerate() {
        if i != z {
            assert!(v.norm() < 0.05, "{v}");
        }
    }
    assert!((m.filter.energy() - 1.0).abs() < 1e-12);
}

#[test]
fn identify_recovers_latent_covariances_of_a_known_model() {
    let tau = 0.4;
    let src = model_with_filter(tau, vec![16, 16], &[(vec![0, 0], 1.0), (vec![1, 0], 0.6), (vec![0, 1], -0.4)]);
    let size = [256, 256];
    let lam = IndexSet::boxed(&[1, 1]).unwrap();
    let y = synthesize_texture(&src, &size, 99).unwrap();
    let est_tau = estimate_threshold(&y).unwrap();
    assert!((est_tau - tau).abs() < 0.02, "{est_tau}");
    let cx = latent_covariances(&y, &lam, est_tau).unwrap();
    for (i, k) in lam.iter().enumerate() {
        let want = src.filter.autocorrelation(&size, k);
        assert!((cx.at(i).re - want).abs() < 0.03, "lag {k:?}: {} vs {want}", cx.at(i).re);
    }
    let w = WeightMatrix::scalar(lam.len(), DEFAULT_TEXTURE_LAMBDA).unwrap();
    let m = identify(&y, &lam, &w, &IdentifyConfig::default()).unwrap();
    assert!((m.tau - est_tau).abs() < 1e-15);
}

#[test]
fn identify_rejects_non_binary_data() {
    let y = DataRecord::from_real(vec![4, 4], (0..16).map(|i| i as f64 / 16.0).collect()).unwrap();
    let lam = IndexSet::boxed(&[1, 1]).unwrap();
    let w = WeightMatrix::scalar(lam.len(), DEFAULT_TEXTURE_LAMBDA).unwrap();
    assert!(identify(&y, &lam, &w, &IdentifyConfig::default()).is_err());
}

/// `d c_y / d c_x`; below about `1e-5` the map is flat to double precision.
fn price_slope(x: f64, tau: f64) -> f64 {
    (-tau * tau / (1.0 + x)).exp() / (2.0 * PI * (1.0 - x * x).sqrt())
}

proptest! {
    #[test]
    fn price_inverse_undoes_forward(x in -1.0..1.0f64, tau in -2.5..2.5f64) {
        prop_assume!(price_slope(x, tau) > 1e-5);
        let y = price_forward(x, tau).unwrap();
        prop_assert!((price_inverse(y, tau).unwrap() - x).abs() < 1e-8);
    }

    #[test]
    fn price_forward_is_increasing_and_odd_signed(a in -1.0..1.0f64, b in -1.0..1.0f64, tau in -2.5..2.5f64) {
        prop_assume!((a - b).abs() > 1e-6);
        prop_assume!(price_slope(a, tau) > 1e-5 && price_slope(b, tau) > 1e-5);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(price_forward(lo, tau).unwrap() < price_forward(hi, tau).unwrap());
        let v = price_forward(a, tau).unwrap();
        prop_assert_eq!(v.signum(), a.signum());
    }
}
