use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Gram matrix is not positive definite")]
    GramNotPd,
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("kernel of the trace map is trivial")]
    EmptyKernel,
    #[error("shift {lambda} resonates with Dirichlet eigenvalue {nearest} (distance {distance:e})")]
    DirichletResonance {
        lambda: f64,
        nearest: f64,
        distance: f64,
    },
    #[error("symmetric solve with a (numerically) singular matrix: min |eigenvalue| = {min_abs:e}")]
    SingularShift { min_abs: f64 },
    #[error("need {needed} eigenvalues, have {available}")]
    InsufficientEigenvalues { needed: usize, available: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("alpha = {0} outside (-1, 1]")]
    BadAlpha(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("normal equations too ill-conditioned (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("boundary data has nonzero normal flux {flux:e}")]
    FluxNotZero { flux: f64 },
    #[error("b . omega = {dot:e} is not zero")]
    NonOrthogonal { dot: f64 },
    #[error("trace rank {found} differs from expected {expected}")]
    TraceRank { expected: usize, found: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("linear algebra failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
