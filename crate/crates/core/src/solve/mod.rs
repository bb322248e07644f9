//! Exact, soft and hard covariance matching through their convex duals.
//!
//! Every solver minimizes a discretized dual over the coefficients `q` of a
//! positive trigonometric polynomial `Q`, then recovers the primal quantities:
//! the matched moments `r̂`, the absolutely continuous part `P/Q̂`, and the
//! singular remainder `ĉ = r̂ - moments(P/Q̂)` carried by atoms at the zeros of
//! `Q̂`.
//!
//! When the optimum has a singular part, the grid optimum places `Q̂` slightly
//! below zero between two nodes and converges only at second order in the
//! grid spacing. The solver then identifies the zeros, re-solves on the
//! subspace of polynomials vanishing to second order there, and recovers the
//! atoms from that solution. Only when the restricted problem is infeasible
//! does it fall back to lifting the grid solution by a constant so that its
//! minimum is exactly zero.

mod kkt;
mod newton;
mod objective;
mod singular;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::analysis::sufficient_hard_existence;
use crate::error::{Error, Result};
use crate::grid::{fourier_coefficients, synthesize, GridField, GridSpec};
use crate::index::{HermitianSeq, IndexSet};
use crate::weight::WeightMatrix;

pub use kkt::{kkt_report, KktReport};
pub use objective::{
    gradient_hard, gradient_soft, hessian_hard, hessian_soft, objective_exact, objective_hard,
    objective_soft, DualObjective, Mode,
};
pub use singular::{recover_singular, Atom, SingularPart};

pub(crate) use singular::{atom_moments, refine_minimum, refined_minima, wrap_angle};

use newton::{minimize, NewtonResult, Outcome, Restricted, Smooth};
use objective::{basis_gradient_rows, basis_matrix};

/// Tuning knobs for the Newton solvers.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Quadrature grid; `None` picks [`GridSpec::default_for`] the index set.
    pub grid: Option<GridSpec>,
    pub max_iters: usize,
    /// Stop when `‖∇‖_∞ ≤ grad_tol · (1 + ‖c‖_∞)`.
    pub grad_tol: f64,
    pub backtrack: f64,
    pub armijo: f64,
    /// Smallest admissible value of `Q` at a node.
    pub positivity_margin: f64,
    /// Iterates with a coefficient larger than this count as divergent.
    pub divergence_bound: f64,
    /// Run the restricted re-solve when a singular part is detected.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid: None,
            max_iters: 200,
            grad_tol: 1e-9,
            backtrack: 0.5,
            armijo: 1e-4,
            positivity_margin: 1e-12,
            divergence_bound: 1e6,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn with_grid(grid: GridSpec) -> Self {
        Self { grid: Some(grid), ..Self::default() }
    }

    pub fn grid_for(&self, index: &IndexSet) -> GridSpec {
        self.grid.clone().unwrap_or_else(|| GridSpec::default_for(index))
    }

    fn validate(&self) -> Result<()> {
        let ok = self.max_iters >= 1
            && self.grad_tol > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.armijo > 0.0
            && self.armijo < 0.5
            && self.positivity_margin > 0.0
            && self.divergence_bound > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("solver configuration out of range".into()))
        }
    }
}

/// Where the reported solution came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refinement {
    /// Plain grid optimum.
    None,
    /// Re-solved with `Q̂` constrained to vanish at the detected zeros.
    Restricted,
    /// Grid optimum lifted by a constant so that its minimum is zero.
    Lifted,
    /// Closed-form answer (hard mode with the prior inside the ball).
    Trivial,
}

impl Refinement {
    pub fn name(self) -> &'static str {
        match self {
            Refinement::None => "none",
            Refinement::Restricted => "restricted",
            Refinement::Lifted => "lifted",
            Refinement::Trivial => "trivial",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Diagnostics {
    pub grid: GridSpec,
    pub iterations: usize,
    pub grad_norm: f64,
    /// The line search stopped at the resolution limit rather than at the
    /// gradient tolerance.
    pub stalled: bool,
    pub min_q_grid: f64,
    pub max_q_grid: f64,
    /// Smallest local minimum of `Q̂` found off the grid.
    pub min_q_refined: f64,
    pub refinement: Refinement,
}

/// Result of a solve: dual optimum, primal recovery and certificates.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub mode: Mode,
    pub q: HermitianSeq,
    pub r: HermitianSeq,
    pub c_hat: HermitianSeq,
    /// Present in hard mode only.
    pub gamma: Option<f64>,
    pub atoms: Vec<Atom>,
    pub kkt: KktReport,
    pub diagnostics: Diagnostics,
}

impl DualSolution {
    /// `P / Q̂` sampled on `grid`.
    pub fn spectrum(&self, p: &HermitianSeq, grid: &GridSpec) -> Result<GridField> {
        let pf = synthesize(p, grid)?;
        let qf = synthesize(&self.q, grid)?;
        pf.zip_with(&qf, |a, b| if b > 0.0 { a.max(0.0) / b } else { f64::INFINITY })
    }
}

/// Matches `c` exactly with the rational density `P/Q̂` plus atoms.
///
/// ```
/// use covext::{solve_exact, HermitianSeq, IndexSet, SolverConfig};
///
/// let lam = IndexSet::symmetric_1d(1);
/// let c = HermitianSeq::from_real(lam.clone(), &[0.5, 0.1, 0.0]).unwrap();
/// let p = HermitianSeq::unit(lam);
/// let sol = solve_exact(&c, &p, &SolverConfig::default()).unwrap();
/// assert!((sol.r.dc() - 0.5).abs() < 1e-12);
/// assert!(sol.c_hat.norm() < 1e-8);
/// ```
pub fn solve_exact(c: &HermitianSeq, p: &HermitianSeq, cfg: &SolverConfig) -> Result<DualSolution> {
    solve_mode(Mode::Exact, c, p, None, cfg)
}

/// Minimizes the Kullback–Leibler distance to `P dm` plus `½ ‖r - c‖²_{W⁻¹}`.
pub fn solve_soft(
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    cfg: &SolverConfig,
) -> Result<DualSolution> {
    solve_mode(Mode::Soft, c, p, Some(w), cfg)
}

/// Minimizes the Kullback–Leibler distance to `P dm` subject to
/// `‖r - c‖_{W⁻¹} ≤ 1`.
pub fn solve_hard(
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: &WeightMatrix,
    cfg: &SolverConfig,
) -> Result<DualSolution> {
    solve_mode(Mode::Hard, c, p, Some(w), cfg)
}

/// Dispatches on `mode`; `w` is ignored in exact mode.
pub fn solve(
    mode: Mode,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: Option<&WeightMatrix>,
    cfg: &SolverConfig,
) -> Result<DualSolution> {
    solve_mode(mode, c, p, w, cfg)
}

struct Ctx<'a> {
    mode: Mode,
    c: &'a HermitianSeq,
    p: &'a HermitianSeq,
    w: Option<WeightMatrix>,
    w_orig: Option<&'a WeightMatrix>,
    grid: GridSpec,
    obj: DualObjective,
    tol: f64,
}

fn solve_mode(
    mode: Mode,
    c: &HermitianSeq,
    p: &HermitianSeq,
    w: Option<&WeightMatrix>,
    cfg: &SolverConfig,
) -> Result<DualSolution> {
    cfg.validate()?;
    let index = c.index_set().clone();
    if p.index_set() != &index {
        return Err(Error::IndexSetMismatch);
    }
    let grid = cfg.grid_for(&index);
    let obj = DualObjective::new(mode, c, p, w, &grid)?;
    let ctx = Ctx {
        mode,
        c,
        p,
        w: w.map(|w| w.hermitian_part()),
        w_orig: w,
        grid,
        obj,
        tol: cfg.grad_tol * (1.0 + c.max_abs()),
    };
    let n = index.len();
    let mut x0 = vec![0.0; n];
    x0[0] = 1.0;

    if mode == Mode::Hard {
        let wm = ctx.w.as_ref().expect("hard mode has a weight");
        let diff = p.sub(c)?;
        if wm.inv_norm(&diff)? <= 1.0 {
            return Ok(trivial_hard(&ctx));
        }
        match hard_start(&ctx, wm, cfg)? {
            Some(x) => x0 = x,
            None => {
                let suff = sufficient_hard_existence(c, ctx.w_orig.expect("weight")).unwrap_or(false);
                return Err(Error::NoSolution { iterations: 0, sufficient_condition_holds: suff });
            }
        }
    }

    let res = minimize(&ctx.obj, x0, cfg, ctx.tol);
    debug!(
        "{} solve: {:?} after {} iterations, |grad| = {:e}",
        mode.name(),
        res.outcome,
        res.iterations,
        res.grad_norm
    );
    let bounded = Smooth::q_size(&ctx.obj, &res.x) <= cfg.divergence_bound;
    let failure = match res.outcome {
        Outcome::Converged | Outcome::Stalled => None,
        Outcome::Failed => Some(Error::LineSearchStalled { iterations: res.iterations, grad_norm: res.grad_norm }),
        Outcome::Diverged | Outcome::MaxIterations => {
            let q_norm = res.x[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Some(if mode == Mode::Hard {
                let suff = sufficient_hard_existence(c, ctx.w_orig.expect("weight")).unwrap_or(false);
                Error::NoSolution { iterations: res.iterations, sufficient_condition_holds: suff }
            } else {
                Error::Diverged { iterations: res.iterations, q_norm }
            })
        }
    };
    match failure {
        None => postprocess(&ctx, res, cfg),
        // Near a singular optimum the grid problem is too ill-conditioned
        // for the gradient test; a converged restricted solve settles it.
        Some(err) if bounded && cfg.polish => match postprocess(&ctx, res, cfg) {
            Ok(sol) if sol.diagnostics.refinement == Refinement::Restricted => Ok(sol),
            _ => Err(err),
        },
        Some(err) => Err(err),
    }
}

/// Starting point for the hard problem.
///
/// The hard optimum coincides with the soft optimum under `W/a` where
/// `a = ‖q̂ - e‖_W`. The root of `a ↦ log(‖q̂(a) - e‖_W / a)` is bracketed
/// with warm-started soft solves; the joint problem is then started from
/// `(q̂(a), a/2)`. Returns `None` when no root exists up to a very weak
/// penalty, i.e. the ball does not reach the covariance cone.
fn hard_start(ctx: &Ctx<'_>, wm: &WeightMatrix, cfg: &SolverConfig) -> Result<Option<Vec<f64>>> {
    let n = ctx.c.len();
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    let soft_at = |a: f64, z0: &[f64]| -> Option<Vec<f64>> {
        let obj = DualObjective::new(Mode::Soft, ctx.c, ctx.p, Some(&wm.scaled(1.0 / a).ok()?), &ctx.grid).ok()?;
        let start = if obj.value(z0).is_some() { z0.to_vec() } else { e.clone() };
        let res = minimize(&obj, start, cfg, ctx.tol);
        let bounded = Smooth::q_size(&obj, &res.x) <= cfg.divergence_bound;
        // Near-singular soft optima stall above tolerance; they are still
        // good enough to bracket the root.
        bounded.then_some(res.x)
    };
    let log_ratio = |a: f64, z: &[f64]| -> Result<f64> {
        let d = HermitianSeq::from_real(ctx.c.index_set().clone(), z)?.sub(&HermitianSeq::unit(ctx.c.index_set().clone()))?;
        Ok((wm.norm(&d)? / a).ln())
    };

    let a0 = 0.2 * wm.norm(&ctx.p.sub(ctx.c)?)?;
    let Some(z0) = soft_at(a0, &e) else { return Ok(None) };
    let h0 = log_ratio(a0, &z0)?;
    let (mut lo, mut hi) = ((a0, z0.clone()), (a0, z0));
    if h0 > 0.0 {
        loop {
            let a = hi.0 * 4.0;
            if a > 1e12 * (1.0 + a0) {
                return Ok(None);
            }
            let Some(z) = soft_at(a, &hi.1) else { return Ok(None) };
            let h = log_ratio(a, &z)?;
            if h > 0.0 {
                lo = (a, z.clone());
            }
            hi = (a, z);
            if h <= 0.0 {
                break;
            }
        }
    } else {
        let mut found = false;
        for _ in 0..80 {
            let a = lo.0 / 4.0;
            let Some(z) = soft_at(a, &lo.1) else { break };
            let h = log_ratio(a, &z)?;
            if h <= 0.0 {
                hi = (a, z.clone());
            }
            lo = (a, z);
            if h > 0.0 {
                found = true;
                break;
            }
        }
        if !found {
            // Fall back to the plain start; the joint iteration decides.
            let mut x = e;
            x.push(0.5 * a0);
            return Ok(Some(x));
        }
    }
    while hi.0 / lo.0 > 1.0 + 1e-4 {
        let a = (lo.0 * hi.0).sqrt();
        let Some(z) = soft_at(a, &hi.1) else { break };
        if log_ratio(a, &z)? > 0.0 {
            lo = (a, z);
        } else {
            hi = (a, z);
        }
    }
    let (a, mut x) = hi;
    x.push(0.5 * a);
    Ok(Some(x))
}

fn trivial_hard(ctx: &Ctx<'_>) -> DualSolution {
    let index = ctx.c.index_set().clone();
    let q = HermitianSeq::unit(index.clone());
    let mut sol = DualSolution {
        mode: Mode::Hard,
        q,
        r: ctx.p.clone(),
        c_hat: HermitianSeq::zeros(index),
        gamma: Some(0.0),
        atoms: vec![],
        kkt: KktReport::empty(),
        diagnostics: Diagnostics {
            grid: ctx.grid.clone(),
            iterations: 0,
            grad_norm: 0.0,
            stalled: false,
            min_q_grid: 1.0,
            max_q_grid: 1.0,
            min_q_refined: 1.0,
            refinement: Refinement::Trivial,
        },
    };
    sol.kkt = kkt_report(&sol, ctx.c, ctx.p, ctx.w_orig, Mode::Hard);
    sol
}

/// Primal quantities for a dual point.
struct Primal {
    q: HermitianSeq,
    r: HermitianSeq,
    c_hat: HermitianSeq,
}

fn primal(ctx: &Ctx<'_>, z: &[f64]) -> Result<Primal> {
    let index = ctx.c.index_set().clone();
    let q = HermitianSeq::from_real(index.clone(), z)?;
    let e = HermitianSeq::unit(index.clone());
    let r = match ctx.mode {
        Mode::Exact => ctx.c.clone(),
        Mode::Soft => {
            let w = ctx.w.as_ref().expect("weight");
            ctx.c.add(&w.apply(&q.sub(&e)?)?)?
        }
        Mode::Hard => {
            let w = ctx.w.as_ref().expect("weight");
            let d = q.sub(&e)?;
            let nd = w.norm(&d)?;
            if nd == 0.0 {
                return Err(Error::Numerical("hard solution collapsed onto the prior".into()));
            }
            ctx.c.add(&w.apply(&d)?.scale(1.0 / nd))?
        }
    };
    let m_ac = absolutely_continuous_moments(&ctx.obj, &q)?;
    let c_hat = r.sub(&m_ac)?;
    Ok(Primal { q, r, c_hat })
}

/// Grid moments of `P / Q`.
pub(crate) fn absolutely_continuous_moments(obj: &DualObjective, q: &HermitianSeq) -> Result<HermitianSeq> {
    let qs = obj.q_samples(&q.to_real());
    let mut ratio = Vec::with_capacity(qs.len());
    for (j, (&qj, &pj)) in qs.iter().zip(obj.prior_samples()).enumerate() {
        if !(qj > 0.0) {
            return Err(Error::NonPositive { node: j, value: qj });
        }
        ratio.push(pj / qj);
    }
    let field = GridField::new(obj.grid().clone(), ratio)?;
    fourier_coefficients(&field, obj.index_set())
}

fn postprocess(ctx: &Ctx<'_>, res: NewtonResult, cfg: &SolverConfig) -> Result<DualSolution> {
    let n = ctx.c.len();
    let z_raw = res.x[..n].to_vec();
    let gamma_raw = (ctx.mode == Mode::Hard).then(|| res.x[n]);
    let q_raw = HermitianSeq::from_real(ctx.c.index_set().clone(), &z_raw)?;
    let qfield = synthesize(&q_raw, &ctx.grid)?;
    let qmax = qfield.max();
    let minima = refined_minima(&q_raw, &ctx.grid, 0.05 * qmax)?;
    let min_refined = minima.first().map(|m| m.1).unwrap_or(qfield.min().0);
    let zero_tol = 1e-4 * qmax;
    let zeros: Vec<Vec<f64>> = minima
        .iter()
        .filter(|(_, v)| *v < zero_tol)
        .map(|(t, _)| snap_to_prior_zero(ctx.p, t, &ctx.grid))
        .collect();

    let mut iterations = res.iterations;
    let mut chosen: Option<(Vec<f64>, Option<f64>, Primal, Refinement, Vec<Vec<f64>>)> = None;
    let mut stalled = matches!(res.outcome, Outcome::Stalled);
    let mut grad_norm = res.grad_norm;

    if !zeros.is_empty() && cfg.polish {
        let mut support = zeros.clone();
        while !support.is_empty() {
            match restricted_solve(ctx, &support, &z_raw, gamma_raw, min_refined, cfg) {
                Some(pres) => {
                    iterations += pres.iterations;
                    let z = pres.x[..n].to_vec();
                    let gamma = (ctx.mode == Mode::Hard).then(|| pres.x[n]);
                    let prim = primal(ctx, &z)?;
                    let scale = prim.r.norm().max(1.0);
                    let signed = singular::signed_masses(&prim.c_hat, &support);
                    let negative: Vec<usize> = signed
                        .iter()
                        .enumerate()
                        .filter(|(_, &m)| m < -1e-9 * scale)
                        .map(|(i, _)| i)
                        .collect();
                    if negative.is_empty() {
                        stalled = matches!(pres.outcome, Outcome::Stalled);
                        grad_norm = pres.grad_norm;
                        chosen = Some((z, gamma, prim, Refinement::Restricted, support.clone()));
                        break;
                    }
                    // A zero that would need negative mass is not part of the
                    // optimal support.
                    support = support
                        .into_iter()
                        .enumerate()
                        .filter(|(i, _)| !negative.contains(i))
                        .map(|(_, t)| t)
                        .collect();
                }
                None => {
                    debug!("restricted re-solve unavailable; lifting the grid optimum");
                    break;
                }
            }
        }
        if chosen.is_none() && min_refined < 0.0 && !support.is_empty() {
            let mut z = z_raw.clone();
            z[0] -= min_refined;
            let prim = primal(ctx, &z)?;
            chosen = Some((z, gamma_raw, prim, Refinement::Lifted, zeros.clone()));
        }
    }

    let (_, gamma, prim, refinement, support) = match chosen {
        Some(c) => c,
        None => {
            let prim = primal(ctx, &z_raw)?;
            (z_raw.clone(), gamma_raw, prim, Refinement::None, zeros.clone())
        }
    };

    let singular = prim.c_hat.norm() > singular::DETECTION_TOL * prim.r.norm() && min_refined < zero_tol;
    let atoms = if singular {
        let mut locs = support;
        if let Ok(more) = refined_minima(&prim.q, &ctx.grid, 0.05 * qmax) {
            let qm = synthesize(&prim.q, &ctx.grid)?.max();
            for (t, v) in more {
                if v <= 1e-6 * qm && !locs.iter().any(|l| singular::torus_distance(l, &t) < 1e-6) {
                    locs.push(t);
                }
            }
        }
        let part = singular::fit_atoms(&prim.c_hat, &locs);
        if part.residual > singular::FIT_TOL * prim.r.norm().max(1.0) {
            warn!(
                "atom fit residual {:e} is large; the grid may be too coarse for this singular part",
                part.residual
            );
        }
        part.atoms
    } else {
        if prim.c_hat.norm() > singular::DETECTION_TOL * prim.r.norm() {
            warn!(
                "moment mismatch {:e} without a zero of Q; refine the grid",
                prim.c_hat.norm()
            );
        }
        vec![]
    };

    let final_field = synthesize(&prim.q, &ctx.grid)?;
    let mut sol = DualSolution {
        mode: ctx.mode,
        q: prim.q,
        r: prim.r,
        c_hat: prim.c_hat,
        gamma,
        atoms,
        kkt: KktReport::empty(),
        diagnostics: Diagnostics {
            grid: ctx.grid.clone(),
            iterations,
            grad_norm,
            stalled,
            min_q_grid: final_field.min().0,
            max_q_grid: final_field.max(),
            min_q_refined: min_refined,
            refinement,
        },
    };
    sol.kkt = kkt_report(&sol, ctx.c, ctx.p, ctx.w_orig, ctx.mode);
    Ok(sol)
}

/// If `P` has a zero within a few grid cells of `theta`, returns that zero.
fn snap_to_prior_zero(p: &HermitianSeq, theta: &[f64], grid: &GridSpec) -> Vec<f64> {
    let cell = grid
        .points()
        .iter()
        .map(|&n| 2.0 * std::f64::consts::PI / n as f64)
        .fold(0.0, f64::max);
    let (tp, vp) = refine_minimum(p, theta, 3.0 * cell);
    if vp.abs() <= 1e-9 * p.max_abs() {
        tp.into_iter().map(wrap_angle).collect()
    } else {
        theta.to_vec()
    }
}

/// Minimizes the dual over polynomials with `Q(θ_j) = 0` and `∇Q(θ_j) = 0`
/// at each support point.
fn restricted_solve(
    ctx: &Ctx<'_>,
    support: &[Vec<f64>],
    z_raw: &[f64],
    gamma_raw: Option<f64>,
    min_refined: f64,
    cfg: &SolverConfig,
) -> Option<NewtonResult> {
    let index = ctx.c.index_set();
    let n = index.len();
    let values = basis_matrix(index, support);
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for (j, theta) in support.iter().enumerate() {
        rows.push(values.row(j).transpose());
        let g = basis_gradient_rows(index, theta);
        for a in 0..g.nrows() {
            rows.push(g.row(a).transpose());
        }
    }
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for r in &rows {
        let nr = r.norm();
        if nr > 0.0 {
            let u = r / nr;
            gram += &u * u.transpose();
        }
    }
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.amax().max(1.0);
    let free: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= 1e-10 * top).collect();
    if free.is_empty() {
        return None;
    }
    let hard = ctx.mode == Mode::Hard;
    let m = free.len() + usize::from(hard);
    let mut embed = DMatrix::zeros(n + usize::from(hard), m);
    for (col, &i) in free.iter().enumerate() {
        embed.view_mut((0, col), (n, 1)).copy_from(&eig.eigenvectors.column(i));
    }
    if hard {
        embed[(n, m - 1)] = 1.0;
    }
    let problem = Restricted { inner: &ctx.obj, embed };

    // Start from the orthogonal projection of the grid optimum, or of its
    // lifted version.
    let mut starts = vec![z_raw.to_vec()];
    if min_refined < 0.0 {
        let mut z = z_raw.to_vec();
        z[0] -= min_refined;
        starts.push(z);
    }
    for z in starts {
        let mut x = z;
        if let Some(g) = gamma_raw {
            x.push(g);
        }
        let y0: Vec<f64> = problem
            .embed
            .tr_mul(&DVector::from_vec(x))
            .as_slice()
            .to_vec();
        if problem.inner.value(&problem.lift(&y0)).is_none() {
            continue;
        }
        let res = minimize(&problem, y0, cfg, ctx.tol);
        if matches!(res.outcome, Outcome::Converged | Outcome::Stalled) {
            let x = problem.lift(&res.x);
            return Some(NewtonResult { x, ..res });
        }
        debug!("restricted solve ended with {:?}", res.outcome);
    }
    None
}

/// Moments `Σ mass_j e^{i(k,θ_j)}` of a list of atoms.
pub fn atoms_moments(index: &IndexSet, atoms: &[Atom]) -> HermitianSeq {
    let mut v = vec![Complex64::new(0.0, 0.0); index.len()];
    for a in atoms {
        for (acc, m) in v.iter_mut().zip(atom_moments(index, &a.theta)) {
            *acc += m * a.mass;
        }
    }
    HermitianSeq::symmetrized(index.clone(), v)
}
