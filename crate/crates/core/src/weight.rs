//! Hermitian positive-definite weight matrices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::index::{HermitianSeq, IndexSet};

/// Hermitian positive-definite matrix with a cached Cholesky factor.
///
/// Rows and columns follow the order of the [`IndexSet`] the weight is used
/// with.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    mat: DMatrix<Complex64>,
    chol: Cholesky<Complex64, Dyn>,
}

impl WeightMatrix {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        let n = mat.nrows();
        if n == 0 || mat.ncols() != n {
            return Err(Error::InvalidWeight("matrix must be square and nonempty".into()));
        }
        if mat.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidWeight("non-finite entry".into()));
        }
        let scale = mat.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..=i {
                let d = (mat[(i, j)] - mat[(j, i)].conj()).norm();
                if d > 1e-12 * scale {
                    return Err(Error::InvalidWeight(format!(
                        "not Hermitian at ({i},{j}), asymmetry {d:e}"
                    )));
                }
            }
        }
        let mut mat = mat;
        for i in 0..n {
            mat[(i, i)].im = 0.0;
            for j in 0..i {
                let avg = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
                mat[(i, j)] = avg;
                mat[(j, i)] = avg.conj();
            }
        }
        let chol = Cholesky::new(mat.clone())
            .ok_or_else(|| Error::InvalidWeight("not positive definite".into()))?;
        // Cholesky succeeds on some numerically semidefinite inputs; require a
        // meaningful pivot.
        let l = chol.l_dirty();
        let min_pivot = (0..n).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
        if !(min_pivot > 1e-14 * scale.sqrt()) {
            return Err(Error::InvalidWeight("not positive definite".into()));
        }
        Ok(Self { mat, chol })
    }

    /// `λ I` of size `n`.
    pub fn scalar(n: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidWeight(format!("scalar weight {lambda} must be positive")));
        }
        Self::new(DMatrix::from_diagonal_element(n, n, Complex64::new(lambda, 0.0)))
    }

    pub fn from_real(mat: &DMatrix<f64>) -> Result<Self> {
        Self::new(mat.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn size(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// Whether every entry is real.
    pub fn is_real(&self) -> bool {
        self.mat.iter().all(|v| v.im == 0.0)
    }

    /// If the matrix is `λ I`, returns `λ`.
    pub fn as_scalar(&self) -> Option<f64> {
        let l = self.mat[(0, 0)].re;
        let n = self.size();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { l } else { 0.0 };
                if self.mat[(i, j)] != Complex64::new(want, 0.0) {
                    return None;
                }
            }
        }
        Some(l)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidWeight(format!("scale factor {s} must be positive")));
        }
        Self::new(self.mat.map(|v| v * s))
    }

    fn check(&self, x: &HermitianSeq) -> Result<()> {
        if x.len() != self.size() {
            return Err(Error::IndexSetMismatch);
        }
        Ok(())
    }

    /// `W x` as a plain vector.
    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(x);
        (&self.mat * v).as_slice().to_vec()
    }

    /// `W x`, symmetrized back onto the index set of `x`.
    pub fn apply(&self, x: &HermitianSeq) -> Result<HermitianSeq> {
        self.check(x)?;
        let y = self.apply_vec(x.values());
        Ok(HermitianSeq::symmetrized(x.index_set().clone(), y))
    }

    /// `W⁻¹ x` as a plain vector.
    pub fn solve_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(x);
        self.chol.solve(&v).as_slice().to_vec()
    }

    /// `x* W x`, real by Hermitian symmetry.
    pub fn quad(&self, x: &[Complex64]) -> f64 {
        let wx = self.apply_vec(x);
        x.iter().zip(&wx).map(|(a, b)| (a.conj() * b).re).sum::<f64>().max(0.0)
    }

    /// `x* W⁻¹ x`.
    pub fn inv_quad(&self, x: &[Complex64]) -> f64 {
        let wx = self.solve_vec(x);
        x.iter().zip(&wx).map(|(a, b)| (a.conj() * b).re).sum::<f64>().max(0.0)
    }

    /// `‖x‖_W`.
    pub fn norm(&self, x: &HermitianSeq) -> Result<f64> {
        self.check(x)?;
        Ok(self.quad(x.values()).sqrt())
    }

    /// `‖x‖_{W⁻¹}`.
    pub fn inv_norm(&self, x: &HermitianSeq) -> Result<f64> {
        self.check(x)?;
        Ok(self.inv_quad(x.values()).sqrt())
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.mat).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest eigenvalue of `W⁻¹`, i.e. `‖W^{-1/2}‖₂²`.
    pub fn inv_spectral_norm_sq(&self) -> f64 {
        1.0 / self.min_eigenvalue()
    }

    /// The part of `W` that maps Hermitian sequences to Hermitian sequences:
    /// `½ (W + F conj(W) F)` with `F` the flip `k ↦ -k`.
    ///
    /// Equal to `W` for the usual weights (real diagonal, `λ I`, and any `W`
    /// built from a real symmetric kernel in `k - l`).
    pub fn hermitian_part(&self) -> Self {
        let n = self.size();
        let m = DMatrix::from_fn(n, n, |i, j| {
            (self.mat[(i, j)] + self.mat[(n - 1 - i, n - 1 - j)].conj()) * 0.5
        });
        // A convex combination of PD matrices is PD.
        Self::new(m).expect("symmetrized weight stays positive definite")
    }

    /// The quadratic form `z ↦ ‖x(z)‖²_W` in the real coordinates of
    /// [`HermitianSeq::to_real`], as a real symmetric matrix.
    pub fn real_form(&self, index: &IndexSet) -> DMatrix<f64> {
        let m = realify_basis(index);
        let wm = &self.mat * &m;
        let g = m.adjoint() * wm;
        let n = g.nrows();
        DMatrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)].re + g[(j, i)].re))
    }
}

/// The complex matrix `M` with `x = M z` for real coordinates `z`.
pub(crate) fn realify_basis(index: &IndexSet) -> DMatrix<Complex64> {
    let n = index.len();
    let zp = index.zero_position();
    let mut m = DMatrix::zeros(n, n);
    m[(zp, 0)] = Complex64::new(1.0, 0.0);
    for (j, i) in index.positive_positions().enumerate() {
        let (ca, cb) = (1 + 2 * j, 2 + 2 * j);
        m[(i, ca)] = Complex64::new(1.0, 0.0);
        m[(n - 1 - i, ca)] = Complex64::new(1.0, 0.0);
        m[(i, cb)] = Complex64::new(0.0, 1.0);
        m[(n - 1 - i, cb)] = Complex64::new(0.0, -1.0);
    }
    m
}

/// Eigenvalues of a Hermitian matrix via its real symmetric embedding.
pub(crate) fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    if a.iter().all(|v| v.im == 0.0) {
        let r = a.map(|v| v.re);
        return r.symmetric_eigenvalues().as_slice().to_vec();
    }
    // [[Re, -Im], [Im, Re]] has each eigenvalue twice.
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = a[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    });
    let mut ev = big.symmetric_eigenvalues().as_slice().to_vec();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev.into_iter().step_by(2).collect()
}
