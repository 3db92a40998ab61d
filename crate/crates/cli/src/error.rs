use thiserror::Error;

/// Ways a run can end other than success; each maps to an exit status.
#[derive(Debug, Error)]
pub enum RunError {
    /// Bad flags, config file or input data.
    #[error("{0}")]
    Usage(String),
    /// The requested experiment cannot be carried out (e.g. a dataset spec
    /// whose rejection rate is too high).
    #[error("infeasible experiment: {0}")]
    Infeasible(String),
    /// Computation or I/O failure after validation.
    #[error("{0}")]
    Runtime(String),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Infeasible(_) => EXIT_INFEASIBLE,
            RunError::Runtime(_) => EXIT_VERIFICATION_FAILED,
        }
    }
}

impl From<qnoise::Error> for RunError {
    fn from(e: qnoise::Error) -> Self {
        match e {
            qnoise::Error::Infeasible { .. } => RunError::Infeasible(e.to_string()),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(format!("I/O error: {e}"))
    }
}
