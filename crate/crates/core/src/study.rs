//! Monte-Carlo comparison of covariance estimators followed by spectral
//! estimation, on simulated ARMA fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{biased_cov, unbiased_cov, DataRecord};
use crate::grid::GridSpec;
use crate::index::{HermitianSeq, IndexSet};
use crate::simulate::{simulate_field_with, true_covariances, Arma2D};
use crate::solve::{solve_exact, solve_hard, solve_soft, DualSolution, SolverConfig};
use crate::weight::WeightMatrix;

/// Estimator and solver combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Procedure {
    BiasedExact,
    BiasedSoft,
    UnbiasedSoft,
    BiasedHard,
    UnbiasedHard,
}

impl Procedure {
    pub const PRIMARY: [Procedure; 3] = [Procedure::BiasedExact, Procedure::BiasedSoft, Procedure::UnbiasedSoft];
    pub const ALL: [Procedure; 5] = [
        Procedure::BiasedExact,
        Procedure::BiasedSoft,
        Procedure::UnbiasedSoft,
        Procedure::BiasedHard,
        Procedure::UnbiasedHard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Procedure::BiasedExact => "biased+exact",
            Procedure::BiasedSoft => "biased+soft",
            Procedure::UnbiasedSoft => "unbiased+soft",
            Procedure::BiasedHard => "biased+hard",
            Procedure::UnbiasedHard => "unbiased+hard",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    /// Samples simulated along each axis.
    pub steps: usize,
    /// Side of the trailing window used for estimation.
    pub window: usize,
    /// `Λ` is the box `{|k_j| ≤ lambda_box}`.
    pub lambda_box: usize,
    pub solver: SolverConfig,
    /// Starting grid for the reference covariances.
    pub truth_grid: usize,
    pub seed: u64,
    /// Also run the hard-constrained variants.
    pub include_hard: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            window: 9,
            lambda_box: 2,
            solver: SolverConfig::with_grid(GridSpec::uniform(2, 50, true).expect("valid")),
            truth_grid: 128,
            seed: 0,
            include_hard: false,
        }
    }
}

/// Outcome of one procedure on one replicate.
#[derive(Clone, Debug)]
pub struct ProcedureResult {
    pub procedure: Procedure,
    /// `‖r̂ - c_true‖₂`, or the error message if the solve failed.
    pub error: std::result::Result<f64, String>,
    /// Weight used (`λ` of `W = λ I`), if any.
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub window: DataRecord,
    pub biased: HermitianSeq,
    pub unbiased: HermitianSeq,
    pub results: Vec<ProcedureResult>,
}

#[derive(Clone, Debug)]
pub struct StudySummary {
    pub truth: HermitianSeq,
    pub replicates: Vec<ReplicateResult>,
}

impl StudySummary {
    /// Mean error of a procedure over the replicates where it succeeded.
    pub fn mean_error(&self, procedure: Procedure) -> Option<f64> {
        let errs: Vec<f64> = self
            .replicates
            .iter()
            .flat_map(|r| r.results.iter())
            .filter(|p| p.procedure == procedure)
            .filter_map(|p| p.error.as_ref().ok().copied())
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }
}

/// Random stream for replicate `r`; independent of how replicates are
/// scheduled.
pub fn replicate_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

fn error_of(sol: Result<DualSolution>, truth: &HermitianSeq) -> std::result::Result<f64, String> {
    match sol {
        Ok(s) => s.r.sub(truth).map(|d| d.norm()).map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    }
}

/// Runs replicate `r` of the study.
pub fn run_replicate(sys: &Arma2D, cfg: &StudyConfig, truth: &HermitianSeq, r: usize) -> Result<ReplicateResult> {
    let index = truth.index_set().clone();
    let mut rng = replicate_rng(cfg.seed, r);
    let field = simulate_field_with(sys, cfg.steps, &mut rng)?;
    let window = field.tail_window(&[cfg.window, cfg.window])?;
    let biased = biased_cov(&window, &index)?;
    let unbiased = unbiased_cov(&window, &index)?;
    let prior = HermitianSeq::unit(index.clone());
    let n = index.len();
    let weight_for = |est: &HermitianSeq| -> Result<(f64, WeightMatrix)> {
        let d = truth.sub(est)?.norm();
        let lam = (d * d).max(1e-12);
        Ok((lam, WeightMatrix::scalar(n, lam)?))
    };
    let mut results = Vec::new();
    let procs: &[Procedure] = if cfg.include_hard { &Procedure::ALL } else { &Procedure::PRIMARY };
    for &proc_ in procs {
        let (est, solver): (&HermitianSeq, u8) = match proc_ {
            Procedure::BiasedExact => (&biased, 0),
            Procedure::BiasedSoft => (&biased, 1),
            Procedure::UnbiasedSoft => (&unbiased, 1),
            Procedure::BiasedHard => (&biased, 2),
            Procedure::UnbiasedHard => (&unbiased, 2),
        };
        let (error, lambda) = match solver {
            0 => (error_of(solve_exact(est, &prior, &cfg.solver), truth), None),
            _ => {
                let (lam, w) = weight_for(est)?;
                let sol = if solver == 1 {
                    solve_soft(est, &prior, &w, &cfg.solver)
                } else {
                    solve_hard(est, &prior, &w, &cfg.solver)
                };
                (error_of(sol, truth), Some(lam))
            }
        };
        results.push(ProcedureResult { procedure: proc_, error, lambda });
    }
    Ok(ReplicateResult { replicate: r, window, biased, unbiased, results })
}

/// Runs `replicates` independent replicates in parallel; output order is by
/// replicate number.
pub fn run_study(sys: &Arma2D, cfg: &StudyConfig, replicates: usize) -> Result<StudySummary> {
    if cfg.window == 0 || cfg.window > cfg.steps {
        return Err(Error::InvalidArgument("window must be between 1 and the number of steps".into()));
    }
    let index = IndexSet::boxed(&[cfg.lambda_box, cfg.lambda_box])?;
    let truth = true_covariances(sys, &index, &GridSpec::uniform(2, cfg.truth_grid, false)?)?;
    let reps: Vec<ReplicateResult> = (0..replicates)
        .into_par_iter()
        .map(|r| run_replicate(sys, cfg, &truth, r))
        .collect::<Result<_>>()?;
    Ok(StudySummary { truth, replicates: reps })
}
