use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}) out of range for dimension {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("asymmetric input: entries ({i}, {j}) = {upper} and ({j}, {i}) = {lower} disagree")]
    Asymmetric { i: usize, j: usize, upper: f64, lower: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero or nonpositive pivot in column {col} (value {value})")]
    ZeroPivot { col: usize, value: f64 },

    #[error("nonpositive pivot {value} at elimination step {step}; input is not an irreducible Laplacian")]
    BrokenPivot { step: usize, value: f64 },

    #[error("invalid star: {0}")]
    InvalidStar(String),

    #[error("matrix is not {expected}: classified as {got}")]
    WrongClass { expected: &'static str, got: String },

    #[error("matrix is reducible but an irreducible input is required")]
    Reducible,

    #[error("invalid permutation: {0}")]
    InvalidPerm(String),

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("nested-dissection tree does not match the matrix: {0}")]
    TreeMismatch(String),

    #[error("preconditioner is not positive definite (z'r = {0})")]
    IndefinitePreconditioner(f64),

    #[error("matrix is not positive definite along the Krylov subspace (p'Ap = {0})")]
    IndefiniteMatrix(f64),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
