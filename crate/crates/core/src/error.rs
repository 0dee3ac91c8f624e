use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("norm exponent must be >= 1 (got {0})")]
    InvalidExponent(f64),

    #[error("sobolev order {0} unsupported (k <= 2)")]
    UnsupportedOrder(usize),

    #[error("incompatible Neumann data: integral of rhs {rhs} vs boundary flux {flux}")]
    Incompatible { rhs: f64, flux: f64 },

    #[error("input is not mean-zero (integral {integral:e})")]
    NotMeanZero { integral: f64 },

    #[error("zero input")]
    ZeroInput,

    #[error("linear solver failed: {reason} (residual {residual:e})")]
    Solver { reason: String, residual: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{what} did not converge after {iterations} iterations (last error {last:e})")]
    NonConvergent {
        what: &'static str,
        iterations: usize,
        last: f64,
    },

    #[error("below constructive regime: {0}")]
    BelowRegime(String),

    #[error("admissibility lost: {0}")]
    Admissibility(String),

    #[error("bad field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
