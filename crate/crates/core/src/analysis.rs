//! Relations between the soft and hard formulations, a sufficient condition
//! for an absolutely continuous optimum, and a one-dimensional example with a
//! closed-form solution.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::index::HermitianSeq;
use crate::solve::{solve_hard, SolverConfig};
use crate::weight::{hermitian_eigenvalues, WeightMatrix};

fn dist_from_unit(w: &WeightMatrix, q_hat: &HermitianSeq) -> Result<f64> {
    let e = HermitianSeq::unit(q_hat.index_set().clone());
    let d = q_hat.sub(&e)?;
    let nd = w.norm(&d)?;
    let tiny = 1e-14 * (1.0 + q_hat.max_abs());
    if !(nd > tiny) {
        return Err(Error::InvalidArgument(
            "q̂ equals e; the weight correspondence is undefined on the trivial branch".into(),
        ));
    }
    Ok(nd)
}

/// `W_soft = W_hard / ‖q̂ - e‖_{W_hard}`.
///
/// ```
/// use covext::{soft_weight_from_hard, HermitianSeq, IndexSet, WeightMatrix};
///
/// let lam = IndexSet::symmetric_1d(1);
/// let q = HermitianSeq::from_real(lam, &[2.0, 0.0, 0.0]).unwrap();
/// let w_hard = WeightMatrix::scalar(3, 4.0).unwrap();
/// let w_soft = soft_weight_from_hard(&w_hard, &q).unwrap();
/// assert_eq!(w_soft.as_scalar(), Some(2.0));
/// ```
pub fn soft_weight_from_hard(w_hard: &WeightMatrix, q_hat: &HermitianSeq) -> Result<WeightMatrix> {
    let a = dist_from_unit(w_hard, q_hat)?;
    w_hard.scaled(1.0 / a)
}

/// `W_hard = W_soft · ‖q̂ - e‖²_{W_soft}`.
pub fn hard_weight_from_soft(w_soft: &WeightMatrix, q_hat: &HermitianSeq) -> Result<WeightMatrix> {
    let a = dist_from_unit(w_soft, q_hat)?;
    w_soft.scaled(a * a)
}

/// Outcome of [`singular_free_bound`].
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// The sufficient condition holds, so the optimum has no singular part.
    pub guaranteed_absolutely_continuous: bool,
    /// `1/‖c - p‖_{W⁻¹} - ‖W^{-1/2}‖_{2,1}`; `+∞` when `c = p`.
    pub margin: f64,
    /// `‖W^{-1/2}‖_{2,1}` or an upper bound for it.
    pub lhs: f64,
    pub rhs: f64,
    /// Whether `lhs` is the exact norm rather than an upper bound.
    pub exact_norm: bool,
}

/// Largest size for which the induced norm is computed by enumeration.
pub const ENUMERATION_LIMIT: usize = 20;

/// Checks `‖W^{-1/2}‖_{2,1} < ‖c - p‖_{W⁻¹}^{-1}`, under which the soft
/// optimum is absolutely continuous.
///
/// For `W = λ I` this reduces to `λ > |Λ|^{1/2} ‖c - p‖₂`.
pub fn singular_free_bound(c: &HermitianSeq, p: &HermitianSeq, w: &WeightMatrix) -> Result<BoundReport> {
    let diff = c.sub(p)?;
    let dn = w.inv_norm(&diff)?;
    let rhs = if dn == 0.0 { f64::INFINITY } else { 1.0 / dn };
    let a = inverse_sqrt(w.matrix());
    let n = a.nrows();
    let (lhs, exact_norm) = match a.iter().all(|v| v.im == 0.0) && n <= ENUMERATION_LIMIT {
        true => (norm_2_to_1_real(&a.map(|v| v.re)), true),
        false => (
            (n as f64).sqrt() * w.inv_spectral_norm_sq().sqrt(),
            false,
        ),
    };
    let margin = rhs - lhs;
    Ok(BoundReport {
        guaranteed_absolutely_continuous: margin > 0.0,
        margin,
        lhs,
        rhs,
        exact_norm,
    })
}

/// `W^{-1/2}` by eigendecomposition.
fn inverse_sqrt(w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = w.nrows();
    if w.iter().all(|v| v.im == 0.0) {
        let eig = w.map(|v| v.re).symmetric_eigen();
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let r = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        return r.map(|v| Complex64::new(v, 0.0));
    }
    // Real embedding [[Re, -Im], [Im, Re]] commutes with the matrix
    // functions we need.
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = w[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    });
    let eig = big.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let r = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    DMatrix::from_fn(n, n, |i, j| Complex64::new(r[(i, j)], r[(i + n, j)]))
}

/// `max_{‖x‖₂ = 1} ‖A x‖₁ = max_{s ∈ {±1}ⁿ} ‖Aᵀ s‖₂`, enumerating sign
/// vectors in Gray-code order so each step is a rank-one update.
pub(crate) fn norm_2_to_1_real(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    // s and -s give the same value; fix s_0 = +1.
    let mut v: Vec<f64> = (0..a.ncols()).map(|j| (0..n).map(|i| a[(i, j)]).sum()).collect();
    let mut signs = vec![1.0f64; n];
    let mut best = v.iter().map(|x| x * x).sum::<f64>();
    let count: u64 = 1u64 << (n - 1);
    for step in 1..count {
        let bit = step.trailing_zeros() as usize + 1;
        signs[bit] = -signs[bit];
        let s = 2.0 * signs[bit];
        for (j, vj) in v.iter_mut().enumerate() {
            *vj += s * a[(bit, j)];
        }
        let val = v.iter().map(|x| x * x).sum::<f64>();
        if val > best {
            best = val;
        }
    }
    best.sqrt()
}

/// Closed-form solution of the soft problem for `c = (c1, 1, c1)`,
/// `P = 1 - cos θ`, `W = λ I` on `Λ = {-1, 0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleExample {
    /// Whether the optimum has a singular part (`c1 > 0` and `λ < 2 c1`).
    pub singular: bool,
    /// `Q̂ = q0 (1 - cos θ)` in the singular regime.
    pub q0: f64,
    /// Mass of the atom at `θ = 0`. Meaningless (and `≤ 0`) when not singular.
    pub beta: f64,
}

/// See [`OracleExample`].
///
/// ```
/// let ex = covext::oracle_1d_example(0.5, 0.5).unwrap();
/// assert!(ex.singular);
/// assert!((ex.q0 - 3f64.sqrt() / 1.5).abs() < 1e-12);
/// ```
pub fn oracle_1d_example(c1: f64, lambda: f64) -> Result<OracleExample> {
    if !(lambda > 0.0) || !lambda.is_finite() || !c1.is_finite() {
        return Err(Error::InvalidArgument(format!("need λ > 0, got {lambda}")));
    }
    let a = lambda + c1 - 1.0;
    let q0 = (a + (6.0 * lambda + a * a).sqrt()) / (3.0 * lambda);
    let beta = c1 - lambda * q0 / 2.0;
    Ok(OracleExample {
        singular: c1 > 0.0 && lambda < 2.0 * c1,
        q0,
        beta,
    })
}

/// Whether `W - cc*` is positive definite, which guarantees that the hard
/// problem has a solution for every prior.
///
/// A positive answer also implies `c* W⁻¹ c < 1`; that is checked and a
/// violation (possible only through rounding) downgrades the answer to
/// `false`.
pub fn sufficient_hard_existence(c: &HermitianSeq, w: &WeightMatrix) -> Result<bool> {
    let n = c.len();
    if w.size() != n {
        return Err(Error::IndexSetMismatch);
    }
    let v = c.values();
    let m = DMatrix::from_fn(n, n, |i, j| w.matrix()[(i, j)] - v[i] * v[j].conj());
    let scale = m.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let min_eig = hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
    if !(min_eig > 1e-12 * scale) {
        return Ok(false);
    }
    let quad = w.inv_quad(v);
    if quad >= 1.0 {
        log::warn!("W - cc* is positive definite but c* W^-1 c = {quad}; treating as not sufficient");
        return Ok(false);
    }
    Ok(true)
}

/// Brackets the smallest `λ` for which the hard problem with `W = λ I` has a
/// nontrivial solution, by bisection on solver success over `[lo, hi]`.
///
/// Returns `(largest failing λ, smallest succeeding λ)` found.
pub fn hard_feasibility_bracket(
    c: &HermitianSeq,
    p: &HermitianSeq,
    mut lo: f64,
    mut hi: f64,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if !(0.0 < lo && lo < hi) {
        return Err(Error::InvalidArgument("need 0 < lo < hi".into()));
    }
    let n = c.len();
    let works = |l: f64| -> Result<bool> {
        match solve_hard(c, p, &WeightMatrix::scalar(n, l)?, cfg) {
            Ok(_) => Ok(true),
            Err(Error::NoSolution { .. }) | Err(Error::Diverged { .. }) | Err(Error::LineSearchStalled { .. }) => {
                Ok(false)
            }
            Err(e) => Err(e),
        }
    };
    if !works(hi)? {
        return Err(Error::InvalidArgument(format!("no solution even at λ = {hi}")));
    }
    if works(lo)? {
        return Ok((0.0, lo));
    }
    for _ in 0..steps {
        let mid = (lo * hi).sqrt();
        if works(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_to_one_norm_of_identity_is_sqrt_n() {
        for n in 1..8 {
            let a = DMatrix::<f64>::identity(n, n);
            assert!((norm_2_to_1_real(&a) - (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_to_one_norm_matches_brute_force() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.5, 0.3, 0.1, -1.0, 2.0, 0.0, 0.7]);
        let mut best: f64 = 0.0;
        for mask in 0..8u32 {
            let s: Vec<f64> = (0..3).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let v: f64 = (0..3)
                .map(|j| (0..3).map(|i| a[(i, j)] * s[i]).sum::<f64>().powi(2))
                .sum();
            best = best.max(v.sqrt());
        }
        assert!((norm_2_to_1_real(&a) - best).abs() < 1e-12);
    }
}
