use thiserror::Error;

/// Errors produced by the certification library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("expected dimension {expected}, got {actual}")]
    WrongDimension { expected: usize, actual: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),

    #[error("invalid measurement assembly: {0}")]
    InvalidAssembly(String),

    #[error("effect has zero trace")]
    ZeroEffect,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("probability table not normalized at (x={x}, y={y}, z={z}): sum = {sum}")]
    UnnormalizedTable { x: usize, y: usize, z: usize, sum: f64 },

    #[error("enumeration needs {required} strategies, budget is {budget}")]
    BudgetExceeded { required: f64, budget: u64 },

    #[error("splitting ratio {0} outside (0, 1]")]
    RatioOutOfRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
