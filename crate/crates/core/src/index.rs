//! Symmetric exponent sets and Hermitian coefficient sequences.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Finite set of integer exponents `k ∈ Z^d`, closed under negation and
/// containing the origin.
///
/// Exponents are kept in lexicographic order. Because negation reverses
/// lexicographic order on a symmetric set, the exponent at position `i` has
/// its negative at position `len - 1 - i`, and the origin sits in the middle.
#[derive(Clone)]
pub struct IndexSet {
    inner: Arc<Inner>,
}

struct Inner {
    dim: usize,
    flat: Vec<i64>,
}

impl IndexSet {
    /// Builds a set from arbitrary exponents. Order of input is irrelevant.
    pub fn new(dim: usize, exponents: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidIndexSet("dimension must be positive".into()));
        }
        let mut exps = exponents;
        for k in &exps {
            if k.len() != dim {
                return Err(Error::InvalidIndexSet(format!(
                    "exponent {k:?} does not have {dim} components"
                )));
            }
        }
        exps.sort();
        if exps.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidIndexSet("duplicate exponent".into()));
        }
        let n = exps.len();
        if n % 2 == 0 {
            return Err(Error::InvalidIndexSet(
                "a symmetric set containing the origin has odd size".into(),
            ));
        }
        if exps[n / 2].iter().any(|&x| x != 0) {
            return Err(Error::InvalidIndexSet("origin missing".into()));
        }
        for i in 0..n {
            let neg: Vec<i64> = exps[i].iter().map(|x| -x).collect();
            if exps[n - 1 - i] != neg {
                return Err(Error::InvalidIndexSet(format!(
                    "set is not symmetric: {:?} has no negative",
                    exps[i]
                )));
            }
        }
        let flat = exps.into_iter().flatten().collect();
        Ok(Self {
            inner: Arc::new(Inner { dim, flat }),
        })
    }

    /// The full box `{k : |k_j| ≤ n_j}`.
    pub fn boxed(extents: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if dim == 0 {
            return Err(Error::InvalidIndexSet("dimension must be positive".into()));
        }
        let mut exps = vec![vec![]];
        for &n in extents {
            let n = n as i64;
            let mut next = Vec::with_capacity(exps.len() * (2 * n as usize + 1));
            for prefix in &exps {
                for k in -n..=n {
                    let mut v = prefix.clone();
                    v.push(k);
                    next.push(v);
                }
            }
            exps = next;
        }
        Self::new(dim, exps)
    }

    /// `{-n, ..., n}` in one dimension.
    pub fn symmetric_1d(n: usize) -> Self {
        Self::boxed(&[n]).expect("box is always valid")
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn len(&self) -> usize {
        self.inner.flat.len() / self.inner.dim
    }

    /// Never true; a valid set contains at least the origin.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exponent at position `i`.
    pub fn get(&self, i: usize) -> &[i64] {
        let d = self.inner.dim;
        &self.inner.flat[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.inner.flat.chunks_exact(self.inner.dim)
    }

    pub fn zero_position(&self) -> usize {
        self.len() / 2
    }

    /// Position of `-k` given the position of `k`.
    pub fn neg_position(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Positions of the lexicographically positive exponents, in order.
    pub fn positive_positions(&self) -> std::ops::Range<usize> {
        self.zero_position() + 1..self.len()
    }

    pub fn position(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim() {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(k) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Largest `|k_j|` on each axis.
    pub fn max_abs(&self) -> Vec<usize> {
        let d = self.dim();
        let mut m = vec![0usize; d];
        for k in self.iter() {
            for j in 0..d {
                m[j] = m[j].max(k[j].unsigned_abs() as usize);
            }
        }
        m
    }

    /// Per-axis extents if this set is a full box.
    pub fn box_extents(&self) -> Option<Vec<usize>> {
        let ext = self.max_abs();
        let count: usize = ext.iter().map(|n| 2 * n + 1).product();
        (count == self.len()).then_some(ext)
    }
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim && self.inner.flat == other.inner.flat)
    }
}

impl Eq for IndexSet {}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.box_extents() {
            Some(ext) => write!(f, "IndexSet(box {ext:?})"),
            None => f.debug_list().entries(self.iter()).finish(),
        }
    }
}

/// Coefficients on an [`IndexSet`] with `c[-k] = conj(c[k])`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianSeq {
    index: IndexSet,
    values: Vec<Complex64>,
}

/// Relative tolerance used to accept input as Hermitian.
const SYMMETRY_TOL: f64 = 1e-9;

impl HermitianSeq {
    /// Validates symmetry, then symmetrizes exactly.
    pub fn new(index: IndexSet, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != index.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for an index set of size {}",
                values.len(),
                index.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let n = values.len();
        for i in 0..n {
            let diff = (values[i] - values[n - 1 - i].conj()).norm();
            if diff > SYMMETRY_TOL * scale.max(1e-300) {
                return Err(Error::NotHermitian(format!(
                    "coefficient {:?} differs from the conjugate of its mirror by {diff:e}",
                    index.get(i)
                )));
            }
        }
        Ok(Self::symmetrized(index, values))
    }

    /// Averages each coefficient with its conjugate mirror. No validation.
    pub fn symmetrized(index: IndexSet, mut values: Vec<Complex64>) -> Self {
        let n = values.len();
        for i in 0..n / 2 {
            let avg = (values[i] + values[n - 1 - i].conj()) * 0.5;
            values[i] = avg;
            values[n - 1 - i] = avg.conj();
        }
        values[n / 2].im = 0.0;
        Self { index, values }
    }

    pub fn zeros(index: IndexSet) -> Self {
        let n = index.len();
        Self {
            index,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// The unit sequence: 1 at the origin, 0 elsewhere.
    pub fn unit(index: IndexSet) -> Self {
        let mut s = Self::zeros(index);
        let z = s.index.zero_position();
        s.values[z] = Complex64::new(1.0, 0.0);
        s
    }

    /// Builds a sequence from values at the non-negative half
    /// (origin followed by positive exponents in order).
    pub fn from_half(index: IndexSet, half: &[Complex64]) -> Result<Self> {
        let z = index.zero_position();
        if half.len() != z + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} half-coefficients, got {}",
                z + 1,
                half.len()
            )));
        }
        if half[0].im.abs() > SYMMETRY_TOL * half[0].norm().max(1e-300) {
            return Err(Error::NotHermitian("value at the origin is not real".into()));
        }
        let n = index.len();
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        values[z] = Complex64::new(half[0].re, 0.0);
        for (j, v) in half[1..].iter().enumerate() {
            values[z + 1 + j] = *v;
            values[z - 1 - j] = v.conj();
        }
        Ok(Self { index, values })
    }

    /// Real sequence from a function of the exponent (must be even in `k`).
    pub fn from_fn(index: IndexSet, f: impl Fn(&[i64]) -> Complex64) -> Result<Self> {
        let values = index.iter().map(f).collect();
        Self::new(index, values)
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        self.index.position(k).map(|i| self.values[i])
    }

    pub fn at(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    /// Value at the origin.
    pub fn dc(&self) -> f64 {
        self.values[self.index.zero_position()].re
    }

    /// Real coordinates `[c_0, Re c_k, Im c_k, ...]` over positive `k`.
    pub fn to_real(&self) -> Vec<f64> {
        let z = self.index.zero_position();
        let mut out = Vec::with_capacity(self.len());
        out.push(self.values[z].re);
        for i in self.index.positive_positions() {
            out.push(self.values[i].re);
            out.push(self.values[i].im);
        }
        out
    }

    /// Inverse of [`to_real`](Self::to_real).
    pub fn from_real(index: IndexSet, z: &[f64]) -> Result<Self> {
        let n = index.len();
        if z.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} real coordinates, got {}",
                z.len()
            )));
        }
        let zp = index.zero_position();
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        values[zp] = Complex64::new(z[0], 0.0);
        for (j, i) in index.positive_positions().enumerate() {
            let v = Complex64::new(z[1 + 2 * j], z[2 + 2 * j]);
            values[i] = v;
            values[n - 1 - i] = v.conj();
        }
        Ok(Self { index, values })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.index != other.index {
            return Err(Error::IndexSetMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            index: self.index.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            index: self.index.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Euclidean norm over all of the index set.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
