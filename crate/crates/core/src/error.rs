use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("SCF did not converge after {iterations} iterations (last density change {delta:e})")]
    ScfNotConverged { iterations: usize, delta: f64 },

    #[error("term budget exceeded: power {power} would hold more than {budget} terms")]
    TermBudget { power: usize, budget: usize },

    #[error("moment system has no singular value above the cutoff")]
    RankCollapse,

    #[error("polynomial root {re} {im:+}i has imaginary part above tolerance {tolerance:e}")]
    ComplexRoot { re: f64, im: f64, tolerance: f64 },

    #[error("generator {0} is not diagonal in the computational basis")]
    NonDiagonalGenerator(String),

    #[error("determinant is outside the tapering sector")]
    SectorMismatch,

    #[error("dimension too large: {0}")]
    DimensionTooLarge(String),

    #[error("not enough levels: {0}")]
    InsufficientLevels(String),

    #[error("empty count table")]
    EmptyCounts,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        if let Error::Stage { source, .. } = self {
            return source.is_validation();
        }
        matches!(
            self,
            Error::QubitMismatch { .. }
                | Error::InvalidInput(_)
                | Error::Unsupported(_)
                | Error::Parse { .. }
                | Error::Io { .. }
        )
    }
}

/// Tags an error with the pipeline stage it came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            tagged @ Error::Stage { .. } => tagged,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        })
    }
}
