//! Two-dimensional recursive (ARMA) random fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::DataRecord;
use crate::grid::{fourier_coefficients, GridField, GridSpec};
use crate::index::{HermitianSeq, IndexSet};

/// `a(z) y = b(z) u` on `Z²` with coefficients on `{0..K1} × {0..K2}`,
/// where `b(e^{iθ}) = Σ b_k e^{-i(k,θ)}` and likewise for `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Arma2D {
    pub name: String,
    /// `b[k1][k2]`
    pub b: Vec<Vec<f64>>,
    /// `a[k1][k2]`, with `a[0][0] = 1`.
    pub a: Vec<Vec<f64>>,
}

impl Arma2D {
    pub fn new(name: impl Into<String>, b: Vec<Vec<f64>>, a: Vec<Vec<f64>>) -> Result<Self> {
        let rect = |m: &Vec<Vec<f64>>| !m.is_empty() && !m[0].is_empty() && m.iter().all(|r| r.len() == m[0].len());
        if !rect(&b) || !rect(&a) {
            return Err(Error::InvalidArgument("coefficient arrays must be nonempty rectangles".into()));
        }
        if a[0][0] != 1.0 {
            return Err(Error::InvalidArgument("a(0,0) must be 1".into()));
        }
        if b.iter().chain(&a).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self { name: name.into(), b, a })
    }

    /// `Φ(θ) = |b(e^{iθ})|² / |a(e^{iθ})|²`.
    pub fn spectrum_at(&self, theta: &[f64]) -> f64 {
        let mag2 = |m: &Vec<Vec<f64>>| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k1, row) in m.iter().enumerate() {
                for (k2, &v) in row.iter().enumerate() {
                    let ph = k1 as f64 * theta[0] + k2 as f64 * theta[1];
                    re += v * ph.cos();
                    im -= v * ph.sin();
                }
            }
            re * re + im * im
        };
        mag2(&self.b) / mag2(&self.a)
    }
}

/// The example system with 3×3 numerator and denominator.
pub fn default_system() -> Arma2D {
    Arma2D::new(
        "default",
        vec![
            vec![0.9, -0.2, 0.05],
            vec![0.2, 0.3, 0.05],
            vec![-0.05, -0.05, 0.1],
        ],
        vec![
            vec![1.0, 0.1, 0.1],
            vec![-0.2, 0.2, -0.1],
            vec![0.4, -0.1, -0.2],
        ],
    )
    .expect("constant system is valid")
}

/// Runs the recursion on an `n × n` field driven by `noise` (row-major),
/// with zero initial conditions.
pub fn filter_field(sys: &Arma2D, n: usize, noise: &[f64]) -> Result<DataRecord> {
    if n == 0 {
        return Err(Error::InvalidArgument("field size must be positive".into()));
    }
    if noise.len() != n * n {
        return Err(Error::InvalidArgument("noise does not match the field size".into()));
    }
    let mut y = vec![0.0f64; n * n];
    for t1 in 0..n {
        for t2 in 0..n {
            let mut acc = 0.0;
            for (k1, row) in sys.b.iter().enumerate() {
                if k1 > t1 {
                    break;
                }
                for (k2, &bv) in row.iter().enumerate() {
                    if k2 > t2 {
                        break;
                    }
                    acc += bv * noise[(t1 - k1) * n + t2 - k2];
                }
            }
            for (k1, row) in sys.a.iter().enumerate() {
                if k1 > t1 {
                    break;
                }
                for (k2, &av) in row.iter().enumerate() {
                    if k2 > t2 {
                        break;
                    }
                    if k1 == 0 && k2 == 0 {
                        continue;
                    }
                    acc -= av * y[(t1 - k1) * n + t2 - k2];
                }
            }
            if !acc.is_finite() || acc.abs() > 1e150 {
                return Err(Error::Unstable(format!(
                    "system {:?} blew up at ({t1}, {t2})",
                    sys.name
                )));
            }
            y[t1 * n + t2] = acc;
        }
    }
    DataRecord::from_real(vec![n, n], y)
}

/// Unit-variance Gaussian noise for an `n × n` field.
pub fn gaussian_noise(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Simulates `n × n` samples of `sys` driven by white Gaussian noise.
pub fn simulate_field(sys: &Arma2D, n: usize, seed: u64) -> Result<DataRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_field_with(sys, n, &mut rng)
}

pub fn simulate_field_with(sys: &Arma2D, n: usize, rng: &mut ChaCha8Rng) -> Result<DataRecord> {
    let noise = gaussian_noise(n * n, rng);
    filter_field(sys, n, &noise)
}

/// Largest number of points per axis tried by [`true_covariances`].
pub const MAX_TRUTH_GRID: usize = 4096;

/// Moments of `Φ = |b|²/|a|²`.
///
/// Quadrature starts on `grid` and doubles the points per axis until two
/// successive results agree to `1e-12` relative to `c_0`. Systems with poles
/// close to the torus need far more points than their degree suggests, so a
/// fixed grid would return values that still move under refinement.
pub fn true_covariances(sys: &Arma2D, index: &IndexSet, grid: &GridSpec) -> Result<HermitianSeq> {
    if grid.dim() != 2 || index.dim() != 2 {
        return Err(Error::InvalidArgument("ARMA fields are two-dimensional".into()));
    }
    grid.check_resolves(index)?;
    let mut current = grid.clone();
    let mut prev = quadrature(sys, index, &current)?;
    loop {
        let points: Vec<usize> = current.points().iter().map(|&n| 2 * n).collect();
        if points.iter().any(|&n| n > MAX_TRUTH_GRID) {
            log::warn!("covariances of system {:?} not converged at {:?} points", sys.name, current.points());
            return Ok(prev);
        }
        current = GridSpec::new(points, current.offset())?;
        let next = quadrature(sys, index, &current)?;
        let change = next.sub(&prev)?.max_abs();
        prev = next;
        if change <= 1e-12 * prev.dc().abs().max(f64::MIN_POSITIVE) {
            return Ok(prev);
        }
    }
}

fn quadrature(sys: &Arma2D, index: &IndexSet, grid: &GridSpec) -> Result<HermitianSeq> {
    let a_only = Arma2D { name: String::new(), b: sys.a.clone(), a: vec![vec![1.0]] };
    let samples: Vec<(f64, f64)> = (0..grid.node_count())
        .into_par_iter()
        .map(|j| {
            let th = grid.node(j);
            (a_only.spectrum_at(&th), sys.spectrum_at(&th))
        })
        .collect();
    let den_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if !(den_min > 1e-12) {
        return Err(Error::Unstable(format!(
            "denominator of system {:?} nearly vanishes on the grid (min |a|² = {den_min:e})",
            sys.name
        )));
    }
    let field = GridField::new(grid.clone(), samples.into_iter().map(|s| s.1).collect())?;
    fourier_coefficients(&field, index)
}
