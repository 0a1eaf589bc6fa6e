use thiserror::Error;

pub type Result<T, E = PcsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PcsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint set is empty: {0}")]
    EmptyConstraintSet(String),

    #[error("solver aborted: {0}")]
    SolverAbort(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<PcsError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PcsError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        PcsError::InvalidParameter(msg.into())
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        PcsError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with run-context wrappers removed.
    pub fn root(&self) -> &PcsError {
        match self {
            PcsError::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_solver_abort(&self) -> bool {
        matches!(self.root(), PcsError::SolverAbort(_))
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(PcsError::LengthMismatch { expected, got })
    }
}
