mod common;

use covext::trig::{cone_test_toeplitz_1d, eval_poly, grid_positivity_test, inner_product, ConeClass, Positivity};
use covext::{GridSpec, HermitianSeq, IndexSet};
use num_complex::Complex64;
use proptest::prelude::*;

/// Real symmetric sequence on `{-n..n}` from `(c_0, c_1, ..., c_n)`.
fn sym(half: &[f64]) -> HermitianSeq {
    let lam = IndexSet::symmetric_1d(half.len() - 1);
    let h: Vec<Complex64> = half.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    HermitianSeq::from_half(lam, &h).unwrap()
}

#[test]
fn inner_product_examples() {
    let lam = IndexSet::symmetric_1d(1);
    let e = HermitianSeq::unit(lam);
    assert_eq!(inner_product(&e, &e).unwrap(), 1.0);
    let c1 = 0.5;
    let a = sym(&[1.0, c1]);
    let b = sym(&[1.0, -0.5]);
    assert!((inner_product(&a, &b).unwrap() - (1.0 - c1)).abs() < 1e-15);
    let a = sym(&[3.0, 1.0]);
    let b = sym(&[4.0, -2.0]);
    assert!((inner_product(&a, &b).unwrap() - 8.0).abs() < 1e-14);
}

#[test]
fn inner_product_rejects_mismatched_sets() {
    let a = HermitianSeq::unit(IndexSet::symmetric_1d(1));
    let b = HermitianSeq::unit(IndexSet::symmetric_1d(2));
    assert!(inner_product(&a, &b).is_err());
}

#[test]
fn eval_examples() {
    let e = HermitianSeq::unit(IndexSet::symmetric_1d(2));
    assert_eq!(eval_poly(&e, &[1.234]), 1.0);
    let p = sym(&[1.0, -0.5]);
    assert!(eval_poly(&p, &[0.0]).abs() < 1e-15);
    assert!((eval_poly(&p, &[std::f64::consts::PI]) - 2.0).abs() < 1e-15);
}

#[test]
fn toeplitz_cone_examples() {
    assert_eq!(cone_test_toeplitz_1d(&sym(&[3.0, 1.0])).unwrap().0, ConeClass::Interior);
    assert_eq!(cone_test_toeplitz_1d(&sym(&[1.0, 1.0])).unwrap().0, ConeClass::Boundary);
    assert_eq!(cone_test_toeplitz_1d(&sym(&[1.0, -1.0])).unwrap().0, ConeClass::Boundary);
    assert_eq!(cone_test_toeplitz_1d(&sym(&[1.0, -1.1])).unwrap().0, ConeClass::Outside);
    let two_d = HermitianSeq::unit(IndexSet::boxed(&[1, 1]).unwrap());
    assert!(cone_test_toeplitz_1d(&two_d).is_err());
}

#[test]
fn grid_positivity_examples() {
    let grid = GridSpec::uniform(1, 16, false).unwrap();
    let r = grid_positivity_test(&HermitianSeq::unit(IndexSet::symmetric_1d(1)), &grid).unwrap();
    assert_eq!(r.class, Positivity::StrictlyPositive);
    assert!((r.min - 1.0).abs() < 1e-14);

    let r = grid_positivity_test(&sym(&[1.0, -0.5]), &grid).unwrap();
    assert_eq!(r.class, Positivity::NonnegativeWithZeros);
    assert!(r.min.abs() < 1e-14);
    assert!(r.argmin[0].abs() < 1e-14);

    let r = grid_positivity_test(&sym(&[1.0, -1.0]), &grid).unwrap();
    assert_eq!(r.class, Positivity::NegativeSomewhere);
}

#[test]
fn grid_positivity_needs_resolution() {
    let grid = GridSpec::uniform(1, 4, false).unwrap();
    assert!(grid_positivity_test(&sym(&[1.0, 0.1, 0.1, 0.1]), &grid).is_err());
}

fn arb_seq(index: IndexSet) -> impl Strategy<Value = HermitianSeq> {
    let n = index.len();
    prop::collection::vec(-2.0..2.0f64, n).prop_map(move |z| HermitianSeq::from_real(index.clone(), &z).unwrap())
}

fn arb_index() -> impl Strategy<Value = IndexSet> {
    prop_oneof![
        (1usize..=4).prop_map(IndexSet::symmetric_1d),
        (1usize..=2, 1usize..=2).prop_map(|(a, b)| IndexSet::boxed(&[a, b]).unwrap()),
    ]
}

proptest! {
    #[test]
    fn inner_product_is_symmetric((a, b) in arb_index().prop_flat_map(|l| (arb_seq(l.clone()), arb_seq(l)))) {
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab.abs()));
    }

    #[test]
    fn eval_matches_pairing_with_exponentials(
        (p, theta) in arb_index().prop_flat_map(|l| {
            let d = l.dim();
            (arb_seq(l), prop::collection::vec(-3.2..3.2f64, d))
        })
    ) {
        let exps = HermitianSeq::from_fn(p.index_set().clone(), |k| {
            let ph: f64 = k.iter().zip(&theta).map(|(&a, b)| a as f64 * b).sum();
            Complex64::from_polar(1.0, ph)
        })
        .unwrap();
        let paired = inner_product(&p, &exps).unwrap();
        let ev = eval_poly(&p, &theta);
        prop_assert!((ev - paired).abs() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn positive_polynomials_pair_positively_with_bona_fide_moments(seed in 0u64..1000, two_d in any::<bool>()) {
        let lam = if two_d { IndexSet::boxed(&[1, 1]).unwrap() } else { IndexSet::symmetric_1d(3) };
        let mut r = common::rng(seed);
        let p = common::random_positive_poly(&mut r, &lam, 0.05);
        let c = common::random_bona_fide(&mut r, &lam, 0.05);
        let grid = GridSpec::uniform(lam.dim(), 32, false).unwrap();
        prop_assert_eq!(grid_positivity_test(&p, &grid).unwrap().class, Positivity::StrictlyPositive);
        prop_assert!(inner_product(&c, &p).unwrap() > 0.0);
    }
}
