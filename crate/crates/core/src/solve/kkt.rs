//! Residuals of the optimality conditions.

use crate::grid::{fourier_coefficients, synthesize, GridField};
use crate::index::HermitianSeq;
use crate::trig::inner_product;
use crate::weight::WeightMatrix;

use super::{atoms_moments, DualSolution, Mode};

/// Residuals of the four blocks of optimality conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    /// `max(0, -min Q̂)` over the grid.
    pub dual_feasibility: f64,
    /// `|⟨ĉ, q̂⟩|`
    pub complementarity: f64,
    /// `‖r̂ - moments(P/Q̂) - moments(atoms)‖₂`
    pub moment_matching: f64,
    /// Soft: `‖r̂ - c - W(q̂ - e)‖₂`. Hard: `‖(r̂ - c)‖q̂ - e‖_W - W(q̂ - e)‖₂`.
    /// Absent for exact matching, where `r̂ = c` by definition.
    pub weight_relation: Option<f64>,
}

impl KktReport {
    pub(crate) fn empty() -> Self {
        Self {
            dual_feasibility: f64::NAN,
            complementarity: f64::NAN,
            moment_matching: f64::NAN,
            weight_relation: None,
        }
    }

    /// Largest residual, `NaN` treated as infinite.
    pub fn max_residual(&self) -> f64 {
        [
            self.dual_feasibility,
            self.complementarity,
            self.moment_matching,
            self.weight_relation.unwrap_or(0.0),
        ]
        .into_iter()
        .map(|v| if v.is_nan() { f64::INFINITY } else { v })
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Evaluates the optimality conditions for `sol` against the problem data,
/// on the grid the solution was computed on. Never fails: residuals that
/// cannot be evaluated are reported as infinite.
pub fn kkt_report(
    sol: &DualSolution,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: Option<&WeightMatrix>,
    mode: Mode,
) -> KktReport {
    let grid = &sol.diagnostics.grid;
    let index = sol.q.index_set();
    let inf = f64::INFINITY;

    let qfield = synthesize(&sol.q, grid).ok();
    let dual_feasibility = qfield
        .as_ref()
        .map(|f| (-f.min().0).max(0.0))
        .unwrap_or(inf);

    let complementarity = inner_product(&sol.c_hat, &sol.q).map(f64::abs).unwrap_or(inf);

    let moment_matching = (|| {
        let qf = qfield.as_ref()?;
        let pf = synthesize(p, grid).ok()?;
        if qf.values().iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let ratio: Vec<f64> = pf
            .values()
            .iter()
            .zip(qf.values())
            .map(|(&a, &b)| a.max(0.0) / b)
            .collect();
        let field = GridField::new(grid.clone(), ratio).ok()?;
        let m_ac = fourier_coefficients(&field, index).ok()?;
        let atoms = atoms_moments(index, &sol.atoms);
        Some(sol.r.sub(&m_ac).ok()?.sub(&atoms).ok()?.norm())
    })()
    .unwrap_or(inf);

    let weight_relation = match mode {
        Mode::Exact => None,
        Mode::Soft | Mode::Hard => Some(
            (|| {
                let w = w?.hermitian_part();
                let e = HermitianSeq::unit(index.clone());
                let d = sol.q.sub(&e).ok()?;
                let wd = w.apply(&d).ok()?;
                let rc = sol.r.sub(c).ok()?;
                let res = if mode == Mode::Soft {
                    rc.sub(&wd).ok()?
                } else {
                    rc.scale(w.norm(&d).ok()?).sub(&wd).ok()?
                };
                Some(res.norm())
            })()
            .unwrap_or(inf),
        ),
    };

    KktReport { dual_feasibility, complementarity, moment_matching, weight_relation }
}
