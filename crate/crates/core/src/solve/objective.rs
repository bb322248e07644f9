//! Discretized dual objectives in real coordinates.
//!
//! A Hermitian sequence `q` on `Λ` is represented by `z = q.to_real()`, i.e.
//! `[q_0, Re q_k, Im q_k, ...]` over the positive half of `Λ`. In these
//! coordinates `Q(θ) = z_0 + Σ_{k>0} 2 (Re q_k cos(k·θ) + Im q_k sin(k·θ))`,
//! so the samples of `Q` on a grid are `B z` for a fixed real matrix `B`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{synthesize, GridSpec};
use crate::index::{HermitianSeq, IndexSet};
use crate::weight::WeightMatrix;

/// Which of the three dual problems is being solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Exact matching: `⟨c,q⟩ - ∫ P log Q`.
    Exact,
    /// Quadratic penalty: adds `½ ‖q - e‖²_W`.
    Soft,
    /// Ball constraint, solved through the joint function of `(q, γ)`.
    Hard,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Soft => "soft",
            Mode::Hard => "hard",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "soft" => Ok(Mode::Soft),
            "hard" => Ok(Mode::Hard),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// Real sample matrix: row `j` holds `[1, 2cos(k·θ_j), 2sin(k·θ_j), ...]`.
pub(crate) fn basis_matrix(index: &IndexSet, thetas: &[Vec<f64>]) -> DMatrix<f64> {
    let n = index.len();
    let mut b = DMatrix::zeros(thetas.len(), n);
    for (row, theta) in thetas.iter().enumerate() {
        b[(row, 0)] = 1.0;
        for (j, i) in index.positive_positions().enumerate() {
            let k = index.get(i);
            let ph: f64 = k.iter().zip(theta).map(|(&kj, &t)| kj as f64 * t).sum();
            let (s, c) = ph.sin_cos();
            b[(row, 1 + 2 * j)] = 2.0 * c;
            b[(row, 2 + 2 * j)] = 2.0 * s;
        }
    }
    b
}

/// Derivative rows `∂/∂θ_a` of [`basis_matrix`] at one point.
pub(crate) fn basis_gradient_rows(index: &IndexSet, theta: &[f64]) -> DMatrix<f64> {
    let d = theta.len();
    let n = index.len();
    let mut g = DMatrix::zeros(d, n);
    for (j, i) in index.positive_positions().enumerate() {
        let k = index.get(i);
        let ph: f64 = k.iter().zip(theta).map(|(&kj, &t)| kj as f64 * t).sum();
        let (s, c) = ph.sin_cos();
        for a in 0..d {
            g[(a, 1 + 2 * j)] = -2.0 * s * k[a] as f64;
            g[(a, 2 + 2 * j)] = 2.0 * c * k[a] as f64;
        }
    }
    g
}

/// `D · realify(x)` with `D = diag(1, 2, 2, ...)`: the real vector `v` with
/// `⟨x, q⟩ = v · z` for every `q` with coordinates `z`.
pub(crate) fn pairing_vector(x: &HermitianSeq) -> DVector<f64> {
    let mut v = x.to_real();
    for e in v.iter_mut().skip(1) {
        *e *= 2.0;
    }
    DVector::from_vec(v)
}

/// Inverse of [`pairing_vector`].
pub(crate) fn from_pairing_vector(index: &IndexSet, v: &DVector<f64>) -> HermitianSeq {
    let mut z: Vec<f64> = v.iter().copied().collect();
    for e in z.iter_mut().skip(1) {
        *e *= 0.5;
    }
    HermitianSeq::from_real(index.clone(), &z).expect("length matches")
}

/// A discretized dual problem with all data fixed.
///
/// Variables are `z` for the exact and soft problems and `[z, γ]` for the
/// hard problem.
#[derive(Clone, Debug)]
pub struct DualObjective {
    mode: Mode,
    index: IndexSet,
    grid: GridSpec,
    basis: DMatrix<f64>,
    prior: Vec<f64>,
    c_pair: DVector<f64>,
    c0: f64,
    weight: Option<DMatrix<f64>>,
    e: DVector<f64>,
}

impl DualObjective {
    pub fn new(
        mode: Mode,
        c: &HermitianSeq,
        p: &HermitianSeq,
        weight: Option<&WeightMatrix>,
        grid: &GridSpec,
    ) -> Result<Self> {
        let index = c.index_set().clone();
        if p.index_set() != &index {
            return Err(Error::IndexSetMismatch);
        }
        grid.check_resolves(&index)?;
        let weight = match (mode, weight) {
            (Mode::Exact, _) => None,
            (_, Some(w)) => {
                if w.size() != index.len() {
                    return Err(Error::InvalidWeight(format!(
                        "weight has size {} but the index set has {} elements",
                        w.size(),
                        index.len()
                    )));
                }
                Some(w.hermitian_part().real_form(&index))
            }
            (_, None) => {
                return Err(Error::InvalidArgument(format!(
                    "{} mode needs a weight matrix",
                    mode.name()
                )))
            }
        };
        let pfield = synthesize(p, grid)?;
        let scale = p.max_abs();
        let (pmin, at) = pfield.min();
        if pmin < -1e-10 * scale {
            return Err(Error::NegativeField { node: at, value: pmin });
        }
        if scale == 0.0 {
            return Err(Error::InvalidArgument("prior polynomial is zero".into()));
        }
        let prior: Vec<f64> = pfield.values().iter().map(|v| v.max(0.0)).collect();
        let thetas: Vec<Vec<f64>> = (0..grid.node_count()).map(|i| grid.node(i)).collect();
        let basis = basis_matrix(&index, &thetas);
        let n = index.len();
        let mut e = DVector::zeros(n);
        e[0] = 1.0;
        Ok(Self {
            mode,
            c_pair: pairing_vector(c),
            c0: c.dc(),
            index,
            grid: grid.clone(),
            basis,
            prior,
            weight,
            e,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Number of real variables.
    pub fn dim(&self) -> usize {
        self.index.len() + usize::from(self.mode == Mode::Hard)
    }

    pub(crate) fn prior_samples(&self) -> &[f64] {
        &self.prior
    }

    /// Samples of `Q` for the `z` part of `x`.
    pub fn q_samples(&self, x: &[f64]) -> DVector<f64> {
        let z = DVector::from_column_slice(&x[..self.index.len()]);
        &self.basis * z
    }

    fn split<'a>(&self, x: &'a [f64]) -> (DVector<f64>, Option<f64>) {
        let n = self.index.len();
        let z = DVector::from_column_slice(&x[..n]);
        let gamma = (self.mode == Mode::Hard).then(|| x[n]);
        (z, gamma)
    }

    /// Objective value, or `None` outside the domain (`Q ≤ 0` at a node or
    /// `γ ≤ 0`).
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        let (z, gamma) = self.split(x);
        let q = &self.basis * &z;
        let mut integral = 0.0;
        for (&qj, &pj) in q.iter().zip(&self.prior) {
            if !(qj > 0.0) {
                return None;
            }
            if pj != 0.0 {
                integral += pj * qj.ln();
            }
        }
        integral /= q.len() as f64;
        let lin = self.c_pair.dot(&z);
        let base = lin - integral;
        match self.mode {
            Mode::Exact => Some(base),
            Mode::Soft => {
                let dz = &z - &self.e;
                let w = self.weight.as_ref().expect("weight present");
                Some(base + 0.5 * dz.dot(&(w * &dz)))
            }
            Mode::Hard => {
                let g = gamma.expect("hard mode has gamma");
                if !(g > 0.0) {
                    return None;
                }
                let dz = &z - &self.e;
                let w = self.weight.as_ref().expect("weight present");
                let s = dz.dot(&(w * &dz));
                Some(base + s / (4.0 * g) + g - self.c0)
            }
        }
    }

    /// Gradient and Hessian. The caller guarantees `x` is in the domain.
    pub fn grad_hess(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (z, gamma) = self.split(x);
        let n = self.index.len();
        let q = &self.basis * &z;
        let inv_n = 1.0 / q.len() as f64;
        let ratio = DVector::from_iterator(q.len(), q.iter().zip(&self.prior).map(|(&qj, &pj)| pj / qj * inv_n));
        let mut g = &self.c_pair - self.basis.tr_mul(&ratio);
        let mut scaled = self.basis.clone();
        for (mut row, (&qj, &pj)) in scaled.row_iter_mut().zip(q.iter().zip(&self.prior)) {
            row *= pj / (qj * qj) * inv_n;
        }
        let mut h = self.basis.tr_mul(&scaled);
        match self.mode {
            Mode::Exact => (g, symmetrize(h)),
            Mode::Soft => {
                let w = self.weight.as_ref().expect("weight present");
                g += w * (&z - &self.e);
                h += w;
                (g, symmetrize(h))
            }
            Mode::Hard => {
                let w = self.weight.as_ref().expect("weight present");
                let gam = gamma.expect("hard mode has gamma");
                let dz = &z - &self.e;
                let wdz = w * &dz;
                let s = dz.dot(&wdz);
                let mut gf = DVector::zeros(n + 1);
                gf.rows_mut(0, n).copy_from(&(g + &wdz / (2.0 * gam)));
                gf[n] = 1.0 - s / (4.0 * gam * gam);
                let mut hf = DMatrix::zeros(n + 1, n + 1);
                h += w / (2.0 * gam);
                hf.view_mut((0, 0), (n, n)).copy_from(&h);
                let cross = -&wdz / (2.0 * gam * gam);
                for i in 0..n {
                    hf[(i, n)] = cross[i];
                    hf[(n, i)] = cross[i];
                }
                hf[(n, n)] = s / (2.0 * gam * gam * gam);
                (gf, symmetrize(hf))
            }
        }
    }

    /// In hard mode, sets `γ` to its minimizer `½‖q - e‖_W` for the current
    /// `q` (when that is positive).
    pub(crate) fn refresh_gamma(&self, x: &mut [f64]) {
        if self.mode != Mode::Hard {
            return;
        }
        let n = self.index.len();
        let dz = DVector::from_column_slice(&x[..n]) - &self.e;
        let w = self.weight.as_ref().expect("weight present");
        let s = dz.dot(&(w * &dz));
        if s > 0.0 {
            x[n] = 0.5 * s.sqrt();
        }
    }

    /// Largest `t ≤ 1` keeping `Q` and `γ` at least a fraction `1 - frac`
    /// of their current values along `dx`.
    pub(crate) fn step_limit(&self, x: &[f64], dx: &[f64], frac: f64) -> f64 {
        let n = self.index.len();
        let q = self.q_samples(x);
        let dq = self.q_samples(dx);
        let mut t: f64 = 1.0;
        for (&qj, &dj) in q.iter().zip(dq.iter()) {
            if dj < 0.0 {
                t = t.min(frac * qj / -dj);
            }
        }
        if self.mode == Mode::Hard && dx[n] < 0.0 {
            t = t.min(frac * x[n] / -dx[n]);
        }
        t
    }
}

fn symmetrize(mut h: DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

fn coords(q: &HermitianSeq, c: &HermitianSeq) -> Result<Vec<f64>> {
    if q.index_set() != c.index_set() {
        return Err(Error::IndexSetMismatch);
    }
    Ok(q.to_real())
}

fn domain_error(obj: &DualObjective, x: &[f64]) -> Error {
    let q = obj.q_samples(x);
    let (node, value) = q
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(a, m), (i, &v)| if v < m { (i, v) } else { (a, m) });
    Error::NonPositive { node, value }
}

/// Complex gradient `c - m + W(q - e)` from a real gradient vector.
fn gradient_seq(obj: &DualObjective, g: &DVector<f64>) -> HermitianSeq {
    let n = obj.index.len();
    from_pairing_vector(&obj.index, &g.rows(0, n).into_owned())
}

/// `⟨c,q⟩ - (1/N) Σ P log Q + ½ ‖q - e‖²_W` on the grid.
pub fn objective_soft(
    q: &HermitianSeq,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    grid: &GridSpec,
) -> Result<f64> {
    let obj = DualObjective::new(Mode::Soft, c, p, Some(w), grid)?;
    let x = coords(q, c)?;
    obj.value(&x).ok_or_else(|| domain_error(&obj, &x))
}

/// `c - moments(P/Q) + W(q - e)`.
pub fn gradient_soft(
    q: &HermitianSeq,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    grid: &GridSpec,
) -> Result<HermitianSeq> {
    let obj = DualObjective::new(Mode::Soft, c, p, Some(w), grid)?;
    let x = coords(q, c)?;
    obj.value(&x).ok_or_else(|| domain_error(&obj, &x))?;
    Ok(gradient_seq(&obj, &obj.grad_hess(&x).0))
}

/// Hessian in the real coordinates of [`HermitianSeq::to_real`].
pub fn hessian_soft(
    q: &HermitianSeq,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    grid: &GridSpec,
) -> Result<DMatrix<f64>> {
    let obj = DualObjective::new(Mode::Soft, c, p, Some(w), grid)?;
    let x = coords(q, c)?;
    obj.value(&x).ok_or_else(|| domain_error(&obj, &x))?;
    Ok(obj.grad_hess(&x).1)
}

/// `⟨c,q⟩ - (1/N) Σ P log Q`.
pub fn objective_exact(q: &HermitianSeq, c: &HermitianSeq, p: &HermitianSeq, grid: &GridSpec) -> Result<f64> {
    let obj = DualObjective::new(Mode::Exact, c, p, None, grid)?;
    let x = coords(q, c)?;
    obj.value(&x).ok_or_else(|| domain_error(&obj, &x))
}

/// `⟨c,q⟩ - (1/N) Σ P log Q + ‖q - e‖²_W / (4γ) + γ - c_0`.
pub fn objective_hard(
    q: &HermitianSeq,
    gamma: f64,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    grid: &GridSpec,
) -> Result<f64> {
    let obj = DualObjective::new(Mode::Hard, c, p, Some(w), grid)?;
    let mut x = coords(q, c)?;
    x.push(gamma);
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument("gamma must be positive".into()));
    }
    obj.value(&x).ok_or_else(|| domain_error(&obj, &x))
}

/// Gradient of the hard objective: the `q` part as a sequence and `∂/∂γ`.
pub fn gradient_hard(
    q: &HermitianSeq,
    gamma: f64,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    grid: &GridSpec,
) -> Result<(HermitianSeq, f64)> {
    let obj = DualObjective::new(Mode::Hard, c, p, Some(w), grid)?;
    let mut x = coords(q, c)?;
    x.push(gamma);
    obj.value(&x).ok_or_else(|| domain_error(&obj, &x))?;
    let g = obj.grad_hess(&x).0;
    let n = obj.index.len();
    Ok((gradient_seq(&obj, &g), g[n]))
}

/// Hessian of the hard objective in coordinates `[z, γ]`.
pub fn hessian_hard(
    q: &HermitianSeq,
    gamma: f64,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    grid: &GridSpec,
) -> Result<DMatrix<f64>> {
    let obj = DualObjective::new(Mode::Hard, c, p, Some(w), grid)?;
    let mut x = coords(q, c)?;
    x.push(gamma);
    obj.value(&x).ok_or_else(|| domain_error(&obj, &x))?;
    Ok(obj.grad_hess(&x).1)
}
