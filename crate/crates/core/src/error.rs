use thiserror::Error;

use crate::dual_lp::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The LP solver stopped without an optimal basis.
    #[error("LP solve ended with status {status:?}{}", .time.map(|t| format!(" at t={t}")).unwrap_or_default())]
    Solver { status: SolveStatus, time: Option<usize> },

    #[error("singular basis matrix")]
    SingularBasis,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attaches a policy timestep to a solver failure.
    pub fn at_time(self, t: usize) -> Self {
        match self {
            Error::Solver { status, .. } => Error::Solver { status, time: Some(t) },
            other => other,
        }
    }
}
