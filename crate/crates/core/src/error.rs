use thiserror::Error;

/// Errors raised by the regression, selection and benchmark routines.
#[derive(Debug, Error)]
pub enum GpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A factorization or inverse update met a non-positive pivot.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Growing the active inverse produced a Schur complement below the jitter floor.
    #[error("schur complement {schur:e} is below the jitter floor {floor:e}")]
    SchurBelowFloor { schur: f64, floor: f64 },

    /// A greedy stage could not admit the selected candidate.
    #[error("stage {stage}: candidate {candidate} rejected: {source}")]
    CandidateRejected {
        stage: usize,
        candidate: usize,
        #[source]
        source: Box<GpError>,
    },

    #[error("{scheme} scheme failed: {source}")]
    Scheme {
        scheme: &'static str,
        #[source]
        source: Box<GpError>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GpError::InvalidInput(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad data or I/O).
    pub fn is_numeric(&self) -> bool {
        match self {
            GpError::NotPositiveDefinite(_) | GpError::SchurBelowFloor { .. } => true,
            GpError::CandidateRejected { source, .. } | GpError::Scheme { source, .. } => {
                source.is_numeric()
            }
            _ => false,
        }
    }
}

pub type Result<T, E = GpError> = std::result::Result<T, E>;
