use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient `{name}` violates its bounds: value {value} at ({x}, {y})")]
    CoefficientViolation {
        name: String,
        value: f64,
        x: f64,
        y: f64,
    },

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("degenerate patch problem around coarse element {element}: {detail}")]
    PatchDegenerate { element: usize, detail: String },

    #[error("starting step did not converge (increments: {history:?})")]
    StartingStepFailure { history: Vec<f64> },

    #[error("time step {step} did not converge (increments: {history:?})")]
    StepFailure { step: usize, history: Vec<f64> },

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("unknown example id {0}")]
    UnknownExample(u32),

    #[error("config error: {0}")]
    Config(String),

    #[error("cache file {path:?} is invalid: {detail}")]
    Cache { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::CoefficientViolation { .. } => "coefficient-violation",
            Error::SolverFailure(_) => "solver-failure",
            Error::PatchDegenerate { .. } => "patch-degenerate",
            Error::StartingStepFailure { .. } => "starting-step-failure",
            Error::StepFailure { .. } => "step-failure",
            Error::NonFinite { .. } => "non-finite",
            Error::UnknownExample(_) => "unknown-example",
            Error::Config(_) => "config",
            Error::Cache { .. } => "cache",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
