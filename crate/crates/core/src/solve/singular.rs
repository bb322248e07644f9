//! Zeros of `Q̂` and the atomic part of the optimal measure.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{synthesize, GridField, GridSpec};
use crate::index::{HermitianSeq, IndexSet};
use crate::trig::eval_poly_derivs;

/// A point mass `mass · δ_θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    /// Location, each coordinate in `(-π, π]`.
    pub theta: Vec<f64>,
    pub mass: f64,
}

/// Atoms fitted to a singular moment sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularPart {
    pub atoms: Vec<Atom>,
    /// `‖ĉ - Σ mass_j e(θ_j)‖₂`
    pub residual: f64,
}

/// Relative size of `‖ĉ‖` below which there is no singular part.
pub const DETECTION_TOL: f64 = 1e-6;
/// Acceptable atom-fit residual relative to `max(1, ‖r̂‖)`.
pub const FIT_TOL: f64 = 1e-6;

pub(crate) fn wrap_angle(t: f64) -> f64 {
    let mut w = t.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Moment vector `e^{i(k,θ)}` of a unit atom.
pub(crate) fn atom_moments(index: &IndexSet, theta: &[f64]) -> Vec<Complex64> {
    index
        .iter()
        .map(|k| {
            let ph: f64 = k.iter().zip(theta).map(|(&kj, &t)| kj as f64 * t).sum();
            Complex64::from_polar(1.0, ph)
        })
        .collect()
}

/// Local minimizer of a trigonometric polynomial near `start`, found by
/// safeguarded Newton steps that never move more than `radius`.
pub(crate) fn refine_minimum(q: &HermitianSeq, start: &[f64], radius: f64) -> (Vec<f64>, f64) {
    let mut theta = start.to_vec();
    let (mut val, mut grad, mut hess) = eval_poly_derivs(q, &theta);
    let scale = q.max_abs().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let g = DVector::from_vec(grad.clone());
        if g.amax() <= 1e-15 * scale {
            break;
        }
        let mut step = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => {
                // Not convex here; take a short descent step.
                let curv = hess.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(scale);
                -g / curv
            }
        };
        let len = step.norm();
        let cap = radius / 4.0;
        if len > cap {
            step *= cap / len;
        }
        let mut accepted = false;
        let mut t = 1.0;
        while t > 1e-10 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            if cand.iter().zip(start).any(|(a, s)| (a - s).abs() > radius) {
                t *= 0.5;
                continue;
            }
            let (v, gr, h) = eval_poly_derivs(q, &cand);
            if v <= val {
                let moved = cand.iter().zip(&theta).any(|(a, b)| a != b);
                theta = cand;
                val = v;
                grad = gr;
                hess = h;
                accepted = moved;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (theta, val)
}

/// Grid nodes that are no larger than any neighbour, restricted to nodes
/// with value at most `below`.
pub(crate) fn grid_local_minima(field: &GridField, below: f64) -> Vec<usize> {
    let spec = field.spec();
    let dims = spec.points();
    let d = dims.len();
    let vals = field.values();
    let offsets: Vec<Vec<i64>> = if d <= 3 {
        let mut out = vec![vec![]];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|v: Vec<i64>| {
                    (-1..=1).map(move |s| {
                        let mut w = v.clone();
                        w.push(s);
                        w
                    })
                })
                .collect();
        }
        out.into_iter().filter(|v| v.iter().any(|&s| s != 0)).collect()
    } else {
        (0..d)
            .flat_map(|a| {
                [-1i64, 1].into_iter().map(move |s| {
                    let mut v = vec![0i64; d];
                    v[a] = s;
                    v
                })
            })
            .collect()
    };
    let mut out = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v > below {
            continue;
        }
        let idx = spec.unflatten(i);
        let is_min = offsets.iter().all(|off| {
            let nb = idx
                .iter()
                .zip(off)
                .zip(dims)
                .fold(0usize, |acc, ((&j, &o), &n)| {
                    acc * n + (j as i64 + o).rem_euclid(n as i64) as usize
                });
            nb == i || vals[nb] >= v
        });
        if is_min {
            out.push(i);
        }
    }
    out
}

/// Continuous local minima of `Q` seeded from grid minima with value at most
/// `below`, merged and sorted by value.
pub(crate) fn refined_minima(q: &HermitianSeq, grid: &GridSpec, below: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    let field = synthesize(q, grid)?;
    let cell = grid
        .points()
        .iter()
        .map(|&n| 2.0 * PI / n as f64)
        .fold(0.0, f64::max);
    let mut seeds = grid_local_minima(&field, below);
    seeds.sort_by(|&a, &b| field.values()[a].total_cmp(&field.values()[b]));
    seeds.truncate(8 * q.len());
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    for s in seeds {
        let (theta, val) = refine_minimum(q, &grid.node(s), 2.0 * cell);
        let theta: Vec<f64> = theta.into_iter().map(wrap_angle).collect();
        let dup = found.iter().any(|(t, _)| torus_distance(t, &theta) < 1e-6);
        if !dup {
            found.push((theta, val));
        }
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(found)
}

pub(crate) fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrap_angle(x - y).abs())
        .fold(0.0, f64::max)
}

/// Nonnegative least squares by the Lawson–Hanson active set method.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return x;
    }
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.amax().max(1.0) * b.amax().max(1.0);
    for _outer in 0..3 * n + 10 {
        let w = a.tr_mul(&(b - a * &x));
        let cand = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        for _inner in 0..3 * n + 10 {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let s = least_squares_on(a, b, &idx);
            if idx.iter().zip(s.iter()).all(|(_, &v)| v > 0.0) {
                x.fill(0.0);
                for (&j, &v) in idx.iter().zip(s.iter()) {
                    x[j] = v;
                }
                break;
            }
            // Step toward s until a passive variable hits zero.
            let mut alpha = f64::INFINITY;
            for (&j, &v) in idx.iter().zip(s.iter()) {
                if v <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - v));
                }
            }
            for (&j, &v) in idx.iter().zip(s.iter()) {
                x[j] += alpha * (v - x[j]);
            }
            for &j in &idx {
                if x[j] <= 1e-15 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

fn least_squares_on(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])]);
    let svd = sub.svd(true, true);
    svd.solve(b, 1e-13).unwrap_or_else(|_| DVector::zeros(idx.len()))
}

/// Real least-squares system `A m ≈ ĉ` for atoms at the given locations.
fn atom_system(c_hat: &HermitianSeq, locations: &[Vec<f64>]) -> (DMatrix<f64>, DVector<f64>) {
    let index = c_hat.index_set();
    let n = index.len();
    let mut a = DMatrix::zeros(2 * n, locations.len());
    for (j, theta) in locations.iter().enumerate() {
        for (i, v) in atom_moments(index, theta).into_iter().enumerate() {
            a[(2 * i, j)] = v.re;
            a[(2 * i + 1, j)] = v.im;
        }
    }
    let mut b = DVector::zeros(2 * n);
    for (i, v) in c_hat.values().iter().enumerate() {
        b[2 * i] = v.re;
        b[2 * i + 1] = v.im;
    }
    (a, b)
}

/// Unconstrained least-squares masses, used to test whether a proposed
/// support is consistent.
pub(crate) fn signed_masses(c_hat: &HermitianSeq, locations: &[Vec<f64>]) -> Vec<f64> {
    let (a, b) = atom_system(c_hat, locations);
    a.svd(true, true)
        .solve(&b, 1e-13)
        .map(|v| v.as_slice().to_vec())
        .unwrap_or_else(|_| vec![0.0; locations.len()])
}

/// Nonnegative masses at the given locations, at most `|Λ| - 1` of them.
pub(crate) fn fit_atoms(c_hat: &HermitianSeq, locations: &[Vec<f64>]) -> SingularPart {
    let limit = c_hat.len().saturating_sub(1);
    let mut locs: Vec<Vec<f64>> = locations.to_vec();
    loop {
        let (a, b) = atom_system(c_hat, &locs);
        let m = nnls(&a, &b);
        let residual = (&b - &a * &m).norm();
        let mut atoms: Vec<Atom> = locs
            .iter()
            .zip(m.iter())
            .filter(|(_, &w)| w > 0.0)
            .map(|(t, &w)| Atom { theta: t.iter().map(|&x| wrap_angle(x)).collect(), mass: w })
            .collect();
        if atoms.len() <= limit {
            atoms.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap_or(std::cmp::Ordering::Equal));
            return SingularPart { atoms, residual };
        }
        atoms.sort_by(|a, b| b.mass.total_cmp(&a.mass));
        locs = atoms.into_iter().take(limit).map(|a| a.theta).collect();
    }
}

/// Recovers the atomic measure `Σ mass_j δ_{θ_j}` with moments `ĉ`, placing
/// atoms at the zeros of `Q̂`.
///
/// `r̂` sets the detection scale: when `‖ĉ‖ ≤ 1e-6 ‖r̂‖` the result is empty.
/// Candidate locations are the continuous local minima of `Q̂` whose value is
/// at most `1e-6 · max Q̂` on the grid. `p` is accepted for symmetry with the
/// other solver routines; zeros of `Q̂` alone decide the support.
pub fn recover_singular(
    r_hat: &HermitianSeq,
    c_hat: &HermitianSeq,
    q_hat: &HermitianSeq,
    p: &HermitianSeq,
    grid: &GridSpec,
) -> Result<SingularPart> {
    let index = c_hat.index_set();
    if r_hat.index_set() != index || q_hat.index_set() != index || p.index_set() != index {
        return Err(Error::IndexSetMismatch);
    }
    let scale = r_hat.norm().max(1.0);
    if c_hat.norm() <= DETECTION_TOL * r_hat.norm() {
        return Ok(SingularPart { atoms: vec![], residual: c_hat.norm() });
    }
    let field = synthesize(q_hat, grid)?;
    let qmax = field.max();
    let minima = refined_minima(q_hat, grid, 0.05 * qmax)?;
    let locations: Vec<Vec<f64>> = minima
        .into_iter()
        .filter(|(_, v)| *v <= 1e-6 * qmax)
        .map(|(t, _)| t)
        .collect();
    let part = fit_atoms(c_hat, &locations);
    let tolerance = FIT_TOL * scale;
    if part.residual > tolerance {
        return Err(Error::SingularFit { residual: part.residual, tolerance });
    }
    Ok(part)
}
