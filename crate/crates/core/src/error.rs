use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: expected {expected} nodes, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("fixed-point iteration did not converge at level {level} after {iterations} iterations (last change {last_change:e})")]
    NonConvergence {
        level: usize,
        iterations: usize,
        last_change: f64,
    },

    #[error("solution diverged at level {level}: max norm {norm:e} exceeds guard {guard:e}")]
    Diverged { level: usize, norm: f64, guard: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("step {level} failed: {source}")]
    Step {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{phase} failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Self {
        match self {
            e @ (Error::NonConvergence { .. } | Error::Diverged { .. } | Error::Step { .. }) => e,
            e => Error::Step {
                level,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn in_phase(self, phase: &'static str) -> Self {
        Error::Phase {
            phase,
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::SingularMatrix(_) => "singular_matrix",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Diverged { .. } => "diverged",
            Error::NonFinite(_) => "non_finite",
            Error::Step { source, .. } | Error::Phase { source, .. } => source.kind(),
        }
    }
}
