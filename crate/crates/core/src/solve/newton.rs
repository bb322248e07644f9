//! Damped Newton iteration with a fraction-to-the-boundary rule.

use nalgebra::{DMatrix, DVector};

use super::objective::DualObjective;
use super::SolverConfig;

/// A smooth convex function on an open domain.
pub(crate) trait Smooth {
    fn value(&self, x: &[f64]) -> Option<f64>;
    fn grad_hess(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>);
    fn step_limit(&self, x: &[f64], dx: &[f64], frac: f64) -> f64;
    /// Largest magnitude among the `q` coordinates, for divergence checks.
    fn q_size(&self, x: &[f64]) -> f64;
    /// Moves `x` to a point with no larger objective value, if a cheap one
    /// is known.
    fn refresh(&self, _x: &mut [f64]) {}
}

impl Smooth for DualObjective {
    fn value(&self, x: &[f64]) -> Option<f64> {
        DualObjective::value(self, x)
    }
    fn grad_hess(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        DualObjective::grad_hess(self, x)
    }
    fn step_limit(&self, x: &[f64], dx: &[f64], frac: f64) -> f64 {
        DualObjective::step_limit(self, x, dx, frac)
    }
    fn q_size(&self, x: &[f64]) -> f64 {
        x[..self.index_set().len()].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    fn refresh(&self, x: &mut [f64]) {
        DualObjective::refresh_gamma(self, x)
    }
}

/// `x = E y` restricted to a linear subspace.
pub(crate) struct Restricted<'a> {
    pub inner: &'a DualObjective,
    pub embed: DMatrix<f64>,
}

impl Restricted<'_> {
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        (&self.embed * DVector::from_column_slice(y)).as_slice().to_vec()
    }
}

impl Smooth for Restricted<'_> {
    fn value(&self, y: &[f64]) -> Option<f64> {
        self.inner.value(&self.lift(y))
    }
    fn grad_hess(&self, y: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (g, h) = self.inner.grad_hess(&self.lift(y));
        let gy = self.embed.tr_mul(&g);
        let hy = self.embed.tr_mul(&(h * &self.embed));
        (gy, hy)
    }
    fn step_limit(&self, y: &[f64], dy: &[f64], frac: f64) -> f64 {
        self.inner.step_limit(&self.lift(y), &self.lift(dy), frac)
    }
    fn q_size(&self, y: &[f64]) -> f64 {
        Smooth::q_size(self.inner, &self.lift(y))
    }
    fn refresh(&self, y: &mut [f64]) {
        // The auxiliary variable, when present, is the last coordinate on
        // both sides of the embedding.
        let mut x = self.lift(y);
        let before = x.clone();
        self.inner.refresh_gamma(&mut x);
        if x != before {
            let last = y.len() - 1;
            y[last] = x[x.len() - 1];
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Outcome {
    Converged,
    /// Line search could not decrease the objective, but the gradient is
    /// within a small multiple of the tolerance.
    Stalled,
    /// Line search failed far from stationarity.
    Failed,
    Diverged,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub(crate) struct NewtonResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub outcome: Outcome,
}

/// Minimizes `f` starting from the feasible point `x0`.
pub(crate) fn minimize(f: &dyn Smooth, x0: Vec<f64>, cfg: &SolverConfig, tol: f64) -> NewtonResult {
    let mut x = x0;
    let mut fx = f.value(&x).expect("starting point must be feasible");
    let mut grad_norm = f64::INFINITY;
    let mut flat = 0;
    for it in 0..cfg.max_iters {
        let mut xr = x.clone();
        f.refresh(&mut xr);
        if let Some(fr) = f.value(&xr) {
            if fr < fx {
                x = xr;
                fx = fr;
            }
        }
        let (g, h) = f.grad_hess(&x);
        grad_norm = g.amax();
        if grad_norm <= tol {
            return NewtonResult { x, iterations: it, grad_norm, outcome: Outcome::Converged };
        }
        if f.q_size(&x) > cfg.divergence_bound {
            return NewtonResult { x, iterations: it, grad_norm, outcome: Outcome::Diverged };
        }
        let dx = newton_direction(&h, &g);
        let slope = g.dot(&dx);
        let dxs = dx.as_slice();
        let mut t = f.step_limit(&x, dxs, 0.99);
        let mut accepted = None;
        while t > 1e-16 {
            let trial: Vec<f64> = x.iter().zip(dxs).map(|(a, b)| a + t * b).collect();
            if let Some(ft) = f.value(&trial) {
                if ft <= fx + cfg.armijo * t * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= cfg.backtrack;
        }
        match accepted {
            Some((xn, fnew)) => {
                // A step that does not change the iterate means we are at the
                // resolution limit of the objective.
                let moved = xn.iter().zip(&x).any(|(a, b)| a != b);
                let gain = fx - fnew;
                x = xn;
                fx = fnew;
                if !moved {
                    return stall(x, it + 1, grad_norm, tol);
                }
                // Decreases at the rounding level of the objective mean the
                // gradient is dominated by rounding too.
                flat = if gain <= 1e-15 * (1.0 + fx.abs()) { flat + 1 } else { 0 };
                if flat >= 5 {
                    return stall(x, it + 1, grad_norm, tol);
                }
            }
            None => return stall(x, it + 1, grad_norm, tol),
        }
    }
    let (g, _) = f.grad_hess(&x);
    grad_norm = grad_norm.min(g.amax());
    let outcome = if grad_norm <= tol {
        Outcome::Converged
    } else if f.q_size(&x) > cfg.divergence_bound {
        Outcome::Diverged
    } else {
        Outcome::MaxIterations
    };
    NewtonResult { x, iterations: cfg.max_iters, grad_norm, outcome }
}

fn stall(x: Vec<f64>, iterations: usize, grad_norm: f64, tol: f64) -> NewtonResult {
    let outcome = if grad_norm <= 1e3 * tol { Outcome::Stalled } else { Outcome::Failed };
    NewtonResult { x, iterations, grad_norm, outcome }
}

/// Solves `H d = -g`, regularizing `H` if it is not numerically positive
/// definite.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = h.clone().cholesky() {
        let d = ch.solve(&(-g));
        if d.iter().all(|v| v.is_finite()) {
            return d;
        }
    }
    let scale = h.diagonal().amax().max(1e-300);
    let mut mu = 1e-12 * scale;
    loop {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += mu;
        }
        if let Some(ch) = hr.cholesky() {
            return ch.solve(&(-g));
        }
        mu *= 10.0;
        if mu > 1e6 * scale {
            return -g;
        }
    }
}
