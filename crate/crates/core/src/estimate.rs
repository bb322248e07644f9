//! Covariance estimates and the periodogram of a finite data record.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{fft_nd, Direction};
use crate::grid::{GridField, GridSpec};
use crate::index::{HermitianSeq, IndexSet};

/// Samples `y_t` for `t` in the box `0 ≤ t_j < N_j`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DataRecord {
    dims: Vec<usize>,
    values: Vec<Complex64>,
}

impl DataRecord {
    pub fn new(dims: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument("record dimensions must be positive".into()));
        }
        let total: usize = dims.iter().product();
        if values.len() != total {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a record of shape {dims:?}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self { dims, values })
    }

    pub fn from_real(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        Self::new(dims, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// Sub-box starting at `start` with shape `size`.
    pub fn window(&self, start: &[usize], size: &[usize]) -> Result<Self> {
        if start.len() != self.dim() || size.len() != self.dim() {
            return Err(Error::InvalidArgument("window rank mismatch".into()));
        }
        for a in 0..self.dim() {
            if start[a] + size[a] > self.dims[a] {
                return Err(Error::InvalidArgument(format!(
                    "window {start:?}+{size:?} exceeds record {:?}",
                    self.dims
                )));
            }
        }
        let total: usize = size.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            let src = idx
                .iter()
                .zip(start)
                .zip(&self.dims)
                .fold(0, |acc, ((&i, &s), &n)| acc * n + i + s);
            out.push(self.values[src]);
            for a in (0..self.dim()).rev() {
                idx[a] += 1;
                if idx[a] < size[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self::new(size.to_vec(), out)
    }

    /// Last `size` samples along every axis.
    pub fn tail_window(&self, size: &[usize]) -> Result<Self> {
        if size.len() != self.dim() || size.iter().zip(&self.dims).any(|(s, n)| s > n) {
            return Err(Error::InvalidArgument("window larger than the record".into()));
        }
        let start: Vec<usize> = self.dims.iter().zip(size).map(|(n, s)| n - s).collect();
        self.window(&start, size)
    }

    /// The record minus its sample mean.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Self {
            dims: self.dims.clone(),
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }
}

/// `Σ_t y_t conj(y_{t+k})` over `t` with both samples inside the record.
fn lag_sum(data: &DataRecord, k: &[i64]) -> Complex64 {
    let dims = data.dims();
    let d = dims.len();
    // Range of t along each axis such that t + k stays inside.
    let lo: Vec<usize> = k.iter().map(|&kj| (-kj).max(0) as usize).collect();
    let hi: Vec<usize> = k
        .iter()
        .zip(dims)
        .map(|(&kj, &n)| (n as i64 - kj.max(0)) as usize)
        .collect();
    if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
        return Complex64::new(0.0, 0.0);
    }
    let shift = k.iter().zip(dims).fold(0i64, |acc, (&kj, &n)| acc * n as i64 + kj);
    let vals = data.values();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = lo.clone();
    loop {
        let t = idx.iter().zip(dims).fold(0usize, |a, (&i, &n)| a * n + i);
        let s = (t as i64 + shift) as usize;
        acc += vals[t] * vals[s].conj();
        let mut a = d;
        loop {
            if a == 0 {
                return acc;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < hi[a] {
                break;
            }
            idx[a] = lo[a];
        }
    }
}

fn check_record(data: &DataRecord, index: &IndexSet) -> Result<()> {
    if data.dim() != index.dim() {
        return Err(Error::InvalidArgument(format!(
            "record has dimension {} but the index set has {}",
            data.dim(),
            index.dim()
        )));
    }
    for (a, (&n, m)) in data.dims().iter().zip(index.max_abs()).enumerate() {
        if n <= m {
            return Err(Error::RecordTooShort(format!(
                "axis {a} has {n} samples but lags up to {m} are requested"
            )));
        }
    }
    Ok(())
}

fn half_lags(index: &IndexSet) -> Vec<usize> {
    (index.zero_position()..index.len()).collect()
}

fn assemble(index: &IndexSet, half: Vec<Complex64>) -> HermitianSeq {
    HermitianSeq::from_half(index.clone(), &half).expect("origin value is real")
}

/// `c_k = (1/Π N_j) Σ_t y_t conj(y_{t+k})` with `y` zero outside the record.
///
/// ```
/// use covext::{biased_cov, DataRecord, IndexSet};
///
/// let y = DataRecord::from_real(vec![2], vec![1.0, 1.0]).unwrap();
/// let c = biased_cov(&y, &IndexSet::symmetric_1d(1)).unwrap();
/// assert_eq!(c.get(&[0]).unwrap().re, 1.0);
/// assert_eq!(c.get(&[1]).unwrap().re, 0.5);
/// ```
pub fn biased_cov(data: &DataRecord, index: &IndexSet) -> Result<HermitianSeq> {
    check_record(data, index)?;
    let norm = 1.0 / data.len() as f64;
    let half: Vec<Complex64> = half_lags(index)
        .into_par_iter()
        .map(|i| lag_sum(data, index.get(i)) * norm)
        .collect();
    Ok(assemble(index, half))
}

/// `c_k = (1/Π (N_j - |k_j|)) Σ_t y_t conj(y_{t+k})`.
pub fn unbiased_cov(data: &DataRecord, index: &IndexSet) -> Result<HermitianSeq> {
    check_record(data, index)?;
    let half: Vec<Complex64> = half_lags(index)
        .into_par_iter()
        .map(|i| {
            let k = index.get(i);
            let div: f64 = k
                .iter()
                .zip(data.dims())
                .map(|(&kj, &n)| (n as i64 - kj.abs()) as f64)
                .product();
            lag_sum(data, k) / div
        })
        .collect();
    Ok(assemble(index, half))
}

/// `Φ(θ) = (1/Π N_j) |Σ_t y_t e^{i(t,θ)}|²` on every node of `grid`.
pub fn periodogram(data: &DataRecord, grid: &GridSpec) -> Result<GridField> {
    if grid.dim() != data.dim() {
        return Err(Error::InvalidGrid("grid and record dimensions differ".into()));
    }
    let gdims = grid.points().to_vec();
    let shift = if grid.offset() { 0.5 } else { 0.0 };
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.node_count()];
    let ddims = data.dims();
    let mut idx = vec![0usize; ddims.len()];
    for &y in data.values() {
        // Fold t mod G; the offset phase is not periodic, so apply it first.
        let ph: f64 = idx
            .iter()
            .zip(&gdims)
            .map(|(&t, &g)| 2.0 * std::f64::consts::PI * shift * t as f64 / g as f64)
            .sum();
        let pos = idx.iter().zip(&gdims).fold(0usize, |a, (&t, &g)| a * g + t % g);
        buf[pos] += y * Complex64::from_polar(1.0, ph);
        for a in (0..idx.len()).rev() {
            idx[a] += 1;
            if idx[a] < ddims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    fft_nd(&mut buf, &gdims, Direction::Inverse);
    let norm = 1.0 / data.len() as f64;
    GridField::new(grid.clone(), buf.into_iter().map(|z| z.norm_sqr() * norm).collect())
}
