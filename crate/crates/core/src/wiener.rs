//! Binary textures as thresholded Gaussian fields: threshold and covariance
//! estimation, spectral estimation, spectral factorization and synthesis.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimate::{biased_cov, DataRecord};
use crate::fft::{fft_nd, wrapped_index, Direction};
use crate::grid::{synthesize, GridField, GridSpec};
use crate::index::{HermitianSeq, IndexSet};
use crate::solve::{solve_soft, DualSolution, SolverConfig};
use crate::weight::WeightMatrix;

/// Default soft weight `λ` in `W = λ I` for texture identification.
pub const DEFAULT_TEXTURE_LAMBDA: f64 = 0.01;
/// Default number of points per axis of the factorization grid.
pub const DEFAULT_FILTER_GRID: usize = 64;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

/// `τ = Φ⁻¹(1 - mean(y))` for a binary field.
pub fn estimate_threshold(y: &DataRecord) -> Result<f64> {
    let m = y.mean().re;
    threshold_from_mean(m)
}

/// `Φ⁻¹(1 - m)`.
pub fn threshold_from_mean(m: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "field mean {m} must lie strictly between 0 and 1"
        )));
    }
    Ok(std_normal().inverse_cdf(1.0 - m))
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const XK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ];
    const WK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    fn rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WK[7] * fc;
        let mut g = WG[3] * fc;
        let mut mag = WK[7] * fc.abs();
        for i in 0..7 {
            let x = h * XK[i];
            let (l, r) = (f(c - x), f(c + x));
            k += WK[i] * (l + r);
            mag += WK[i] * (l.abs() + r.abs());
            if i % 2 == 1 {
                g += WG[i / 2] * (l + r);
            }
        }
        // Error estimates below the rounding level of the rule are noise.
        let err = ((k - g) * h).abs();
        let floor = 1e3 * f64::EPSILON * mag * h.abs();
        (k * h, if err <= floor { 0.0 } else { err })
    }
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = rule(f, a, b);
        if err <= tol || depth == 0 {
            return val;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth - 1) + recurse(f, m, b, 0.5 * tol, depth - 1)
    }
    recurse(f, a, b, tol, 40)
}

/// Covariance of the thresholded field given the covariance `c_x` of the
/// unit-variance Gaussian field:
/// `c_y = ∫_0^{c_x} exp(-τ²/(1+s)) / (2π √(1-s²)) ds`.
///
/// ```
/// let v = covext::price_forward(1.0, 0.0).unwrap();
/// assert!((v - 0.25).abs() < 1e-12);
/// ```
pub fn price_forward(c_x: f64, tau: f64) -> Result<f64> {
    if !(c_x.abs() <= 1.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("covariance {c_x} outside [-1, 1]")));
    }
    if c_x == 0.0 {
        return Ok(0.0);
    }
    // With s = sin φ the endpoint singularity disappears. `1 + sin φ` is
    // written as `2 sin²(φ/2 + π/4)` to keep its digits near φ = -π/2.
    let t2 = tau * tau;
    let f = move |phi: f64| {
        let den = 2.0 * (0.5 * phi + FRAC_PI_4).sin().powi(2);
        if t2 == 0.0 {
            1.0
        } else if den <= 0.0 {
            0.0
        } else {
            (-t2 / den).exp()
        }
    };
    Ok(integrate(&f, 0.0, c_x.asin(), 1e-14) / (2.0 * PI))
}

/// Inverse of [`price_forward`] in its first argument, by bisection.
pub fn price_inverse(c_y: f64, tau: f64) -> Result<f64> {
    if c_y == 0.0 {
        return Ok(0.0);
    }
    let lo_v = price_forward(-1.0, tau)?;
    let hi_v = price_forward(1.0, tau)?;
    let slack = 1e-12;
    if !(c_y >= lo_v - slack && c_y <= hi_v + slack) {
        return Err(Error::InvalidArgument(format!(
            "binary covariance {c_y} outside [{lo_v}, {hi_v}] for τ = {tau}"
        )));
    }
    let (mut lo, mut hi) = if c_y > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if price_forward(mid, tau)? < c_y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let flo = (price_forward(lo, tau)? - c_y).abs();
    let fhi = (price_forward(hi, tau)? - c_y).abs();
    Ok(if flo <= fhi { lo } else { hi })
}

/// Filter on a periodic grid whose squared magnitude response is a given
/// spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    /// Grid shape; coefficient `h_n` sits at `n mod dims`.
    pub dims: Vec<usize>,
    pub coeffs: Vec<f64>,
}

impl Filter {
    /// Coefficient at signed position `n`.
    pub fn at(&self, n: &[i64]) -> f64 {
        self.coeffs[wrapped_index(n, &self.dims)]
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|v| v * v).sum()
    }

    /// `H(θ_j) = Σ_n h_n e^{-i(n,θ_j)}` on the filter's own grid.
    pub fn response(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut buf, &self.dims, Direction::Forward);
        buf
    }

    /// Circular autocorrelation `Σ_n h_n h_{n+k}` after embedding the filter
    /// on a torus of shape `size`.
    pub fn autocorrelation(&self, size: &[usize], lag: &[i64]) -> f64 {
        let h = self.embed(size);
        let total = h.len();
        let mut acc = 0.0;
        let mut idx = vec![0usize; size.len()];
        for t in 0..total {
            let shifted: Vec<i64> = idx.iter().zip(lag).map(|(&i, &k)| i as i64 + k).collect();
            acc += h[t] * h[wrapped_index(&shifted, size)];
            for a in (0..size.len()).rev() {
                idx[a] += 1;
                if idx[a] < size[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        acc
    }

    /// Coefficients placed on a torus of shape `size` by their signed
    /// positions (folding if the torus is smaller).
    pub fn embed(&self, size: &[usize]) -> Vec<f64> {
        let total: usize = size.iter().product();
        let mut out = vec![0.0; total];
        let n = self.coeffs.len();
        for flat in 0..n {
            let signed = signed_index(flat, &self.dims);
            out[wrapped_index(&signed, size)] += self.coeffs[flat];
        }
        out
    }
}

/// Representative of a periodic index in `[-N/2, N/2)` on each axis.
fn signed_index(mut flat: usize, dims: &[usize]) -> Vec<i64> {
    let mut out = vec![0i64; dims.len()];
    for a in (0..dims.len()).rev() {
        let n = dims[a];
        let j = (flat % n) as i64;
        flat /= n;
        out[a] = if 2 * j >= n as i64 { j - n as i64 } else { j };
    }
    out
}

/// Weight of cepstral index `n` in the half-plane projection: 1 on the
/// positive half, ½ on indices equal to their own negative, 0 otherwise.
fn half_plane_weight(flat: usize, dims: &[usize]) -> f64 {
    let n = signed_index(flat, dims);
    let self_paired = n
        .iter()
        .zip(dims)
        .all(|(&v, &m)| v == 0 || (m % 2 == 0 && 2 * v == -(m as i64)));
    if self_paired {
        return 0.5;
    }
    // Lexicographically positive: the first axis that is neither zero nor
    // self-paired (-N/2 on an even axis) decides.
    for (&v, &m) in n.iter().zip(dims) {
        if v == 0 || (m % 2 == 0 && 2 * v == -(m as i64)) {
            continue;
        }
        return if v > 0 { 1.0 } else { 0.0 };
    }
    0.5
}

/// Spectral factor by cepstral half-plane projection.
///
/// Writes `log Φ = Σ_n ĉ_n e^{-i(n,θ)}` on the grid and keeps the cepstral
/// coefficients on the lexicographically positive half (halving
/// self-conjugate ones). The exponential of the result is a response `H`
/// with `|H|² = Φ` exactly on the grid nodes. In one dimension this is the
/// minimum-phase factor up to cepstral aliasing; in higher dimensions it is
/// a half-plane recursive-style factor with no stability guarantee.
pub fn factorize_spectrum(spectrum: &GridField) -> Result<Filter> {
    let spec = spectrum.spec();
    if spec.offset() {
        return Err(Error::InvalidGrid("factorization needs a grid without offset".into()));
    }
    let (min, at) = spectrum.min();
    if !(min > 0.0) {
        return Err(Error::NonPositive { node: at, value: min });
    }
    let dims = spec.points().to_vec();
    let total = spec.node_count();
    let mut buf: Vec<Complex64> = spectrum.values().iter().map(|&v| Complex64::new(v.ln(), 0.0)).collect();
    // ĉ_n = (1/N) Σ_j log Φ_j e^{+i(n,θ_j)}
    fft_nd(&mut buf, &dims, Direction::Inverse);
    for (flat, v) in buf.iter_mut().enumerate() {
        *v *= half_plane_weight(flat, &dims) / total as f64;
    }
    // log H_j = Σ_n w_n ĉ_n e^{-i(n,θ_j)}
    fft_nd(&mut buf, &dims, Direction::Forward);
    for v in buf.iter_mut() {
        *v = v.exp();
    }
    fft_nd(&mut buf, &dims, Direction::Inverse);
    let coeffs = buf.iter().map(|v| v.re / total as f64).collect();
    Ok(Filter { dims, coeffs })
}

/// Fitted texture model.
#[derive(Clone, Debug)]
pub struct WienerModel {
    /// Threshold in standard-normal units.
    pub tau: f64,
    /// Prior numerator coefficients.
    pub p: HermitianSeq,
    /// Denominator coefficients of the rational spectrum `P/Q̂`.
    pub q: HermitianSeq,
    /// Covariances of the Gaussian field the spectrum was fitted to.
    pub c_x: HermitianSeq,
    /// Unit-energy synthesis filter.
    pub filter: Filter,
}

impl WienerModel {
    /// Binary covariances predicted for textures of shape `size`.
    pub fn predicted_binary_cov(&self, size: &[usize], lag: &[i64]) -> Result<f64> {
        let cx = self.filter.autocorrelation(size, lag) / self.filter.energy();
        price_forward(cx.clamp(-1.0, 1.0), self.tau)
    }

    /// Predicted mean of synthesized textures.
    pub fn predicted_mean(&self) -> f64 {
        1.0 - std_normal().cdf(self.tau)
    }
}

#[derive(Clone, Debug)]
pub struct IdentifyConfig {
    pub solver: SolverConfig,
    /// Points per axis of the grid on which the spectrum is factorized.
    pub filter_grid: usize,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), filter_grid: DEFAULT_FILTER_GRID }
    }
}

/// Covariances of the latent Gaussian field from a binary record.
pub fn latent_covariances(y: &DataRecord, index: &IndexSet, tau: f64) -> Result<HermitianSeq> {
    let cy = biased_cov(&y.centered(), index)?;
    let c0 = cy.dc();
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument("binary field is constant".into()));
    }
    let scale = price_forward(1.0, tau)? / c0;
    let (hi, lo) = (price_forward(1.0, tau)?, price_forward(-1.0, tau)?);
    let mut half = vec![Complex64::new(1.0, 0.0)];
    for i in index.positive_positions() {
        let v = cy.at(i).re * scale;
        let clamped = v.clamp(lo, hi);
        if clamped != v {
            log::warn!(
                "binary covariance {v} at lag {:?} is outside the attainable range; clamped",
                index.get(i)
            );
        }
        half.push(Complex64::new(price_inverse(clamped, tau)?, 0.0));
    }
    HermitianSeq::from_half(index.clone(), &half)
}

/// Fits a texture model to a binary field.
pub fn identify(y: &DataRecord, index: &IndexSet, w: &WeightMatrix, cfg: &IdentifyConfig) -> Result<WienerModel> {
    if y.values().iter().any(|v| v.im != 0.0 || (v.re != 0.0 && v.re != 1.0)) {
        return Err(Error::InvalidArgument("texture must be binary (values 0 and 1)".into()));
    }
    let tau = estimate_threshold(y)?;
    let c_x = latent_covariances(y, index, tau)?;
    let p = HermitianSeq::unit(index.clone());
    let sol: DualSolution = solve_soft(&c_x, &p, w, &cfg.solver)?;
    let grid = GridSpec::uniform(index.dim(), cfg.filter_grid, false)?;
    grid.check_resolves(index)?;
    let spectrum = sol.spectrum(&p, &grid)?;
    let mut filter = factorize_spectrum(&spectrum)?;
    let e = filter.energy().sqrt();
    filter.coeffs.iter_mut().for_each(|v| *v /= e);
    Ok(WienerModel { tau, p, q: sol.q, c_x, filter })
}

/// White noise through the model filter (periodic convolution), normalized
/// to zero mean and unit sample variance, then thresholded at `τ`.
pub fn synthesize_texture(model: &WienerModel, size: &[usize], seed: u64) -> Result<DataRecord> {
    if size.len() != model.filter.dims.len() || size.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("texture size does not match the model dimension".into()));
    }
    let total: usize = size.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<Complex64> = (0..total)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut h: Vec<Complex64> = model.filter.embed(size).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut u, size, Direction::Forward);
    fft_nd(&mut h, size, Direction::Forward);
    for (a, b) in u.iter_mut().zip(&h) {
        *a *= b;
    }
    fft_nd(&mut u, size, Direction::Inverse);
    let x: Vec<f64> = u.iter().map(|v| v.re / total as f64).collect();
    let mean = x.iter().sum::<f64>() / total as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / total as f64;
    let sd = var.sqrt();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| {
            let s = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
            if s > model.tau {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    DataRecord::from_real(size.to_vec(), y)
}

/// `|H|²` of the filter on its grid, for reconstruction checks.
pub fn filter_power(filter: &Filter) -> Result<GridField> {
    let spec = GridSpec::new(filter.dims.clone(), false)?;
    let vals = filter.response().into_iter().map(|v| v.norm_sqr()).collect();
    GridField::new(spec, vals)
}

/// Spectrum `P/Q` of a model sampled on an unshifted grid.
pub fn model_spectrum(model: &WienerModel, points: usize) -> Result<GridField> {
    let grid = GridSpec::uniform(model.q.index_set().dim(), points, false)?;
    let pf = synthesize(&model.p, &grid)?;
    let qf = synthesize(&model.q, &grid)?;
    pf.zip_with(&qf, |a, b| a / b)
}
