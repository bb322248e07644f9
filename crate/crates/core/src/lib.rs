//! Rational covariance extension on the `d`-torus.
//!
//! Given moments `c_k` for `k` in a finite symmetric index set, the solvers
//! find spectra of the form `P/Q` (plus atoms where `Q` vanishes) whose
//! moments match `c` exactly, approximately under a quadratic penalty, or
//! within a weighted ball. Around that core sit covariance estimators,
//! a recursive random-field simulator and a thresholded-Gaussian texture
//! model.
//!
//! ```
//! use covext::{solve_soft, HermitianSeq, IndexSet, SolverConfig, WeightMatrix};
//!
//! let lam = IndexSet::symmetric_1d(1);
//! let c = HermitianSeq::from_real(lam.clone(), &[1.0, 0.3, 0.0]).unwrap();
//! let p = HermitianSeq::unit(lam);
//! let w = WeightMatrix::scalar(3, 0.1).unwrap();
//! let sol = solve_soft(&c, &p, &w, &SolverConfig::default()).unwrap();
//! assert!(sol.kkt.passes(1e-6));
//! ```

mod error;
mod fft;

pub mod analysis;
pub mod estimate;
pub mod grid;
pub mod index;
pub mod io;
pub mod simulate;
pub mod solve;
pub mod study;
pub mod trig;
pub mod weight;
pub mod wiener;

pub use analysis::{
    hard_feasibility_bracket, hard_weight_from_soft, oracle_1d_example, singular_free_bound,
    soft_weight_from_hard, sufficient_hard_existence, BoundReport, OracleExample,
};
pub use error::{Error, Result};
pub use estimate::{biased_cov, periodogram, unbiased_cov, DataRecord};
pub use grid::{moments, synthesize, GridField, GridSpec};
pub use index::{HermitianSeq, IndexSet};
pub use simulate::{default_system, simulate_field, true_covariances, Arma2D};
pub use solve::{
    kkt_report, solve, solve_exact, solve_hard, solve_soft, Atom, DualSolution, KktReport, Mode,
    SolverConfig,
};
pub use trig::{cone_test_toeplitz_1d, eval_poly, grid_positivity_test, inner_product, ConeClass, Positivity};
pub use weight::WeightMatrix;
pub use wiener::{
    estimate_threshold, factorize_spectrum, identify, price_forward, price_inverse, synthesize_texture,
    WienerModel,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/textures.md")]
    mod textures {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
