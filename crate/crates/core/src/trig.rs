//! Trigonometric polynomials: evaluation, the pairing `⟨c, p⟩`, and cheap
//! surrogates for cone membership.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{synthesize, GridSpec};
use crate::index::HermitianSeq;
use crate::weight::hermitian_eigenvalues;

const IMAG_GUARD: f64 = 1e-9;

/// `⟨a, b⟩ = Σ_k a_k conj(b_k)`, real for Hermitian inputs.
///
/// ```
/// use covext::{inner_product, HermitianSeq, IndexSet};
///
/// let lam = IndexSet::symmetric_1d(1);
/// let c = HermitianSeq::from_real(lam.clone(), &[3.0, 1.0, 0.0]).unwrap();
/// let p = HermitianSeq::from_real(lam, &[4.0, -2.0, 0.0]).unwrap();
/// assert_eq!(inner_product(&c, &p).unwrap(), 8.0);
/// ```
pub fn inner_product(a: &HermitianSeq, b: &HermitianSeq) -> Result<f64> {
    if a.index_set() != b.index_set() {
        return Err(Error::IndexSetMismatch);
    }
    let s: Complex64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y.conj())
        .sum();
    if s.im.abs() > IMAG_GUARD * (a.norm() * b.norm()).max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(format!(
            "pairing has imaginary part {:e}",
            s.im
        )));
    }
    Ok(s.re)
}

/// `P(e^{iθ}) = Σ_k p_k e^{-i(k,θ)}`.
pub fn eval_poly(p: &HermitianSeq, theta: &[f64]) -> f64 {
    let index = p.index_set();
    let z = index.zero_position();
    let mut acc = p.at(z).re;
    // Pair k with -k: p_k e^{-ikθ} + conj(p_k) e^{ikθ} = 2 Re(p_k e^{-ikθ}).
    for i in index.positive_positions() {
        let k = index.get(i);
        let phase: f64 = k.iter().zip(theta).map(|(&kj, &t)| kj as f64 * t).sum();
        let v = p.at(i);
        acc += 2.0 * (v.re * phase.cos() + v.im * phase.sin());
    }
    acc
}

/// Gradient and Hessian of `θ ↦ P(e^{iθ})`.
pub(crate) fn eval_poly_derivs(p: &HermitianSeq, theta: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
    let index = p.index_set();
    let d = theta.len();
    let mut val = p.at(index.zero_position()).re;
    let mut grad = vec![0.0; d];
    let mut hess = DMatrix::zeros(d, d);
    for i in index.positive_positions() {
        let k = index.get(i);
        let phase: f64 = k.iter().zip(theta).map(|(&kj, &t)| kj as f64 * t).sum();
        let v = p.at(i);
        let (s, c) = phase.sin_cos();
        let f = 2.0 * (v.re * c + v.im * s);
        let df = 2.0 * (-v.re * s + v.im * c);
        val += f;
        for a in 0..d {
            grad[a] += df * k[a] as f64;
            for b in 0..d {
                hess[(a, b)] -= f * (k[a] * k[b]) as f64;
            }
        }
    }
    (val, grad, hess)
}

/// Outcome of a cone membership surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeClass {
    Interior,
    Boundary,
    Outside,
}

/// Classifies a one-dimensional sequence `(c_{-n}, ..., c_n)` by the smallest
/// eigenvalue of its Toeplitz matrix `T_ij = c_{i-j}`.
pub fn cone_test_toeplitz_1d(c: &HermitianSeq) -> Result<(ConeClass, f64)> {
    let index = c.index_set();
    if index.dim() != 1 {
        return Err(Error::InvalidArgument("Toeplitz test needs a one-dimensional sequence".into()));
    }
    let n = index
        .box_extents()
        .ok_or_else(|| Error::InvalidIndexSet("Toeplitz test needs Λ = {-n..n}".into()))?[0];
    let t = DMatrix::from_fn(n + 1, n + 1, |i, j| {
        let k = i as i64 - j as i64;
        c.get(&[k]).expect("lag inside the box")
    });
    let ev = hermitian_eigenvalues(&t);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = c.max_abs().max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let class = if min > tol {
        ConeClass::Interior
    } else if min >= -tol {
        ConeClass::Boundary
    } else {
        ConeClass::Outside
    };
    Ok((class, min))
}

/// Sign of a polynomial on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Positivity {
    StrictlyPositive,
    NonnegativeWithZeros,
    NegativeSomewhere,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub class: Positivity,
    pub min: f64,
    pub argmin: Vec<f64>,
}

/// Classifies `min_j P(θ_j)` against `1e-10 · max |p_k|`.
pub fn grid_positivity_test(p: &HermitianSeq, grid: &GridSpec) -> Result<PositivityReport> {
    let field = synthesize(p, grid)?;
    let (min, at) = field.min();
    let tol = 1e-10 * p.max_abs().max(f64::MIN_POSITIVE);
    let class = if min > tol {
        Positivity::StrictlyPositive
    } else if min >= -tol {
        Positivity::NonnegativeWithZeros
    } else {
        Positivity::NegativeSomewhere
    };
    Ok(PositivityReport {
        class,
        min,
        argmin: grid.node(at),
    })
}
