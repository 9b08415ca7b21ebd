use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    #[error("exponent not in C+: value {value} <= 1 at ({}, {})", point[0], point[1])]
    NotInCPlus { point: [f64; 2], value: f64 },

    #[error("exponent value {value} is not finite at ({}, {})", point[0], point[1])]
    NonFiniteExponent { point: [f64; 2], value: f64 },

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("unsupported quadrature order {0} (supported: 1..=5)")]
    UnsupportedOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("range error: |t|^p exceeded {cap:e} (t = {base}, p = {exponent})")]
    Range { base: f64, exponent: f64, cap: f64 },

    #[error("bisection did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    NormNotConverged { iterations: usize, lo: f64, hi: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("singular matrix")]
    Singular,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("line search failed at iteration {iteration}: no decrease at minimal step")]
    LineSearch { iteration: usize },

    #[error("mountain-pass ridge collapsed: path maximum {energy} <= 0")]
    RidgeCollapse { energy: f64 },
}
