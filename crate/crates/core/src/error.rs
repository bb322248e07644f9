use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("index sets do not match")]
    IndexSetMismatch,

    #[error("sequence is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("invalid weight matrix: {0}")]
    InvalidWeight(String),

    #[error("grid too coarse: axis {axis} has {points} points but needs at least {required}")]
    GridTooCoarse {
        axis: usize,
        points: usize,
        required: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is negative at node {node} (value {value:e})")]
    NegativeField { node: usize, value: f64 },

    #[error("polynomial is not strictly positive on the grid (value {value:e} at node {node})")]
    NonPositive { node: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data record too short: {0}")]
    RecordTooShort(String),

    #[error("solver diverged after {iterations} iterations (|q|_inf = {q_norm:e}); the data may lie outside the covariance cone")]
    Diverged { iterations: usize, q_norm: f64 },

    #[error("line search stalled at iteration {iterations} with gradient norm {grad_norm:e}")]
    LineSearchStalled { iterations: usize, grad_norm: f64 },

    #[error("no solution: the constraint ball does not meet the covariance cone{}",
        if *.sufficient_condition_holds { " (unexpected: W - cc* is positive definite)" }
        else { " (W - cc* is not positive definite, so existence is not guaranteed)" })]
    NoSolution {
        iterations: usize,
        sufficient_condition_holds: bool,
    },

    #[error("atom fit residual {residual:e} exceeds tolerance {tolerance:e}; refine the grid")]
    SingularFit { residual: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unstable recursion: {0}")]
    Unstable(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
