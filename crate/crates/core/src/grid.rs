//! Uniform grids on the torus, fields sampled on them, and the transforms
//! between coefficient sequences and samples.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft_nd, wrapped_index, Direction};
use crate::index::{HermitianSeq, IndexSet};

/// Default number of points per axis in one dimension.
pub const DEFAULT_POINTS_1D: usize = 512;
/// Default number of points per axis in two or more dimensions.
pub const DEFAULT_POINTS_ND: usize = 50;

/// Uniform product grid with nodes `θ_j = 2π (j + s) / N` on each axis, where
/// `s` is `1/2` for an offset grid and `0` otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    points: Vec<usize>,
    offset: bool,
}

impl GridSpec {
    pub fn new(points: Vec<usize>, offset: bool) -> Result<Self> {
        if points.is_empty() || points.iter().any(|&n| n == 0) {
            return Err(Error::InvalidGrid("every axis needs at least one point".into()));
        }
        Ok(Self { points, offset })
    }

    /// Same number of points on each of `dim` axes.
    pub fn uniform(dim: usize, n: usize, offset: bool) -> Result<Self> {
        Self::new(vec![n; dim], offset)
    }

    /// The grid the solvers use by default for a given index set.
    pub fn default_for(index: &IndexSet) -> Self {
        let d = index.dim();
        let n = if d == 1 { DEFAULT_POINTS_1D } else { DEFAULT_POINTS_ND };
        let need = index.max_abs().into_iter().map(|m| 2 * m + 1).max().unwrap_or(1);
        Self::uniform(d, n.max(need), true).expect("nonzero sizes")
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn offset(&self) -> bool {
        self.offset
    }

    pub fn node_count(&self) -> usize {
        self.points.iter().product()
    }

    fn shift(&self) -> f64 {
        if self.offset {
            0.5
        } else {
            0.0
        }
    }

    /// Angle of index `j` on `axis`.
    pub fn angle(&self, axis: usize, j: usize) -> f64 {
        2.0 * PI * (j as f64 + self.shift()) / self.points[axis] as f64
    }

    /// Multi-index of a flat (row-major) node number.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.points[a];
            flat /= self.points[a];
        }
        idx
    }

    /// Coordinates of a node, each in `[0, 2π)`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .enumerate()
            .map(|(a, j)| self.angle(a, j))
            .collect()
    }

    /// Errors unless every axis can represent `Λ` without aliasing.
    pub fn check_resolves(&self, index: &IndexSet) -> Result<()> {
        if index.dim() != self.dim() {
            return Err(Error::InvalidGrid(format!(
                "grid has dimension {} but the index set has {}",
                self.dim(),
                index.dim()
            )));
        }
        for (axis, (&n, m)) in self.points.iter().zip(index.max_abs()).enumerate() {
            if n < 2 * m + 1 {
                return Err(Error::GridTooCoarse {
                    axis,
                    points: n,
                    required: 2 * m + 1,
                });
            }
        }
        Ok(())
    }

    /// Phase `e^{-i 2π s Σ_j k_j / N_j}` linking the offset grid to the plain DFT.
    fn offset_phase(&self, k: &[i64]) -> Complex64 {
        if !self.offset {
            return Complex64::new(1.0, 0.0);
        }
        let t: f64 = k
            .iter()
            .zip(&self.points)
            .map(|(&kj, &n)| kj as f64 / n as f64)
            .sum();
        Complex64::from_polar(1.0, -PI * t)
    }
}

/// Real samples on every node of a grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.node_count() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                spec.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {i}")));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..spec.node_count()).map(|i| f(&spec.node(i))).collect();
        Self::new(spec, values)
    }

    pub fn constant(spec: GridSpec, v: f64) -> Self {
        let n = spec.node_count();
        Self {
            spec,
            values: vec![v; n],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Minimum value and the node where it occurs.
    pub fn min(&self) -> (f64, usize) {
        self.values
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(m, a), (i, &v)| if v < m { (v, i) } else { (m, a) })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GridField::new(self.spec.clone(), values)
    }
}

/// Samples `P(e^{iθ}) = Σ_k p_k e^{-i(k,θ)}` on every node.
///
/// ```
/// use covext::{GridSpec, HermitianSeq, IndexSet, synthesize};
/// use num_complex::Complex64;
///
/// let lam = IndexSet::symmetric_1d(1);
/// let h = Complex64::new(-0.5, 0.0);
/// let p = HermitianSeq::new(lam, vec![h, Complex64::new(1.0, 0.0), h]).unwrap();
/// let grid = GridSpec::uniform(1, 4, false).unwrap();
/// let field = synthesize(&p, &grid).unwrap();
/// for (got, want) in field.values().iter().zip([0.0, 1.0, 2.0, 1.0]) {
///     assert!((got - want).abs() < 1e-12);
/// }
/// ```
pub fn synthesize(p: &HermitianSeq, grid: &GridSpec) -> Result<GridField> {
    let index = p.index_set();
    grid.check_resolves(index)?;
    let dims = grid.points();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.node_count()];
    for (k, v) in index.iter().zip(p.values()) {
        buf[wrapped_index(k, dims)] += v * grid.offset_phase(k);
    }
    fft_nd(&mut buf, dims, Direction::Forward);
    GridField::new(grid.clone(), buf.into_iter().map(|z| z.re).collect())
}

/// Fourier coefficients `(1/N) Σ_j f(θ_j) e^{i(k,θ_j)}` of any real field,
/// without a sign check.
pub(crate) fn fourier_coefficients(field: &GridField, index: &IndexSet) -> Result<HermitianSeq> {
    let grid = field.spec();
    if index.dim() != grid.dim() {
        return Err(Error::InvalidGrid("dimension mismatch between field and index set".into()));
    }
    let dims = grid.points();
    let mut buf: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, dims, Direction::Inverse);
    let norm = 1.0 / grid.node_count() as f64;
    let values = index
        .iter()
        .map(|k| buf[wrapped_index(k, dims)] * grid.offset_phase(k).conj() * norm)
        .collect();
    Ok(HermitianSeq::symmetrized(index.clone(), values))
}

/// Riemann-sum moments `r_k = (1/N) Σ_j Φ(θ_j) e^{i(k,θ_j)}` of a
/// nonnegative density.
pub fn moments(field: &GridField, index: &IndexSet) -> Result<HermitianSeq> {
    let scale = field.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
    let (min, at) = field.min();
    if min < -1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NegativeField { node: at, value: min });
    }
    fourier_coefficients(field, index)
}

/// `(1/N) Σ_j P(θ_j) log Q(θ_j)`.
pub fn entropy_like_integral(pfield: &GridField, qfield: &GridField) -> Result<f64> {
    if pfield.spec() != qfield.spec() {
        return Err(Error::InvalidGrid("fields live on different grids".into()));
    }
    let mut acc = 0.0;
    for (j, (&p, &q)) in pfield.values().iter().zip(qfield.values()).enumerate() {
        if !(q > 0.0) {
            return Err(Error::NonPositive { node: j, value: q });
        }
        acc += p * q.ln();
    }
    Ok(acc / pfield.values().len() as f64)
}
