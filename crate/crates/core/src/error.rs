use thiserror::Error;

/// Errors raised by the simulator, the noise model and the training code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("gate is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside loss domain [-1/2, 1/2]")]
    Domain { value: f64 },

    #[error("degenerate shrinkage: eta = {eta} (delta undefined)")]
    DegenerateShrinkage { eta: f64 },

    #[error("lambda = 4p/(1-4p) is undefined or negative for p = {p}")]
    LambdaDegenerate { p: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("infeasible dataset spec: accepted {accepted} of {attempts} samples")]
    Infeasible { accepted: usize, attempts: usize },

    #[error("optimization diverged at iteration {iteration}")]
    Diverged { iteration: usize, trace: Vec<f64> },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
