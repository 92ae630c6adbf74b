use thiserror::Error;

#[derive(Debug, Error)]
pub enum QcError {
    #[error("grid size {0} must be a power of two and at least 8")]
    BadGridSize(usize),
    #[error("grid half-width {0} must be positive and finite")]
    BadHalfWidth(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-finite value at index ({j}, {k})")]
    NonFinite { j: usize, k: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Beltrami coefficient has sup norm {0} >= 1")]
    NotContractive(f64),
    #[error("iteration did not converge within {iterations} steps (last change {last_change:e})")]
    Diverged {
        iterations: usize,
        last_change: f64,
        history: Vec<f64>,
    },
    #[error("ill-conditioned fit (condition number {0:e})")]
    IllConditioned(f64),
    #[error("point {0} is too close to the contour")]
    NearContour(String),
    #[error("no admissible window pair for cube {0}")]
    NoAdmissiblePair(String),
    #[error("cube budget of {0} exceeded")]
    CubeBudget(usize),
    #[error("covering is disconnected between the requested cubes")]
    Disconnected,
    #[error("boundary correspondence lost monotonicity")]
    NonMonotone,
    #[error("quadrature did not settle: {0}")]
    Unresolved(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, QcError>;

pub(crate) fn invalid(msg: impl Into<String>) -> QcError {
    QcError::InvalidArgument(msg.into())
}
