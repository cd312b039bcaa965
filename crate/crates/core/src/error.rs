use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters outside the region where the requested profile exists.
    #[error("out of existence window: {0}")]
    OutOfExistenceWindow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("matching conditions could not be solved: {0}")]
    MatchingFailed(String),

    #[error("subspace {subspace} is not available for {model}")]
    IncompatibleSubspace { subspace: String, model: String },

    #[error("truncation length {x_max} is shorter than the required {required}")]
    DomainTooShort { x_max: f64, required: f64 },

    #[error("factorization broke down at shift {shift}: pivot {pivot} at row {row}")]
    FactorizationBreakdown { shift: f64, pivot: f64, row: usize },

    #[error("eigen-iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("frequency {omega} is too close to the existence window edge {edge}")]
    WindowBoundaryTooClose { omega: f64, edge: f64 },

    #[error("no sign change bracketed: {0}")]
    NoBracket(String),

    #[error("inputs belong to different standing waves: {0}")]
    InconsistentInputs(String),

    #[error("linear solve residual {0:e} exceeds tolerance")]
    SolverBreakdown(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed snapshot container: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by invalid user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::OutOfExistenceWindow(_)
                | Error::InvalidParameter(_)
                | Error::DomainMismatch
                | Error::IncompatibleSubspace { .. }
                | Error::DomainTooShort { .. }
                | Error::WindowBoundaryTooClose { .. }
                | Error::InconsistentInputs(_)
                | Error::Unsupported(_)
        )
    }
}
