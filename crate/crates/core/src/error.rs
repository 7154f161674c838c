use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("indices {a:?} and {b:?} coincide modulo the grid size {dims:?}")]
    Aliasing {
        a: Vec<i64>,
        b: Vec<i64>,
        dims: Vec<usize>,
    },
    #[error("imaginary residue {residue:e} exceeds tolerance {tol:e}")]
    ImaginaryResidue { residue: f64, tol: f64 },
    #[error("negative spectrum value {value:e} at grid point {index}")]
    NegativeSpectrum { index: usize, value: f64 },
    #[error("divergence undefined: {0}")]
    Divergence(String),
    #[error("invalid moment data: {0}")]
    InvalidMoments(String),
    #[error("point is not strictly feasible (min P = {p_min:e}, min Q = {q_min:e})")]
    Infeasible { p_min: f64, q_min: f64 },
    #[error("Hessian is not positive definite at iteration {iteration}")]
    Factorization { iteration: usize },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
