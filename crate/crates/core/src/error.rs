//! Error types shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter that must be strictly positive was zero or negative.
    #[error("parameter `{0}` must be > 0")]
    NonPositiveParameter(&'static str),

    /// A rate or power that must be non-negative was negative.
    #[error("parameter `{0}` must be >= 0")]
    NegativeParameter(&'static str),

    /// The cavity-field denominator collapsed; the inputs are unphysical.
    #[error("degenerate cavity denominator (|den| = {0:.3e})")]
    DegenerateDenominator(f64),

    /// Fixed-point iteration did not reach the residual tolerance.
    #[error("no convergence after {iterations} iterations (residual {last_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        last_residual: f64,
    },

    /// An eigensolve or root polish failed to converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A linear system was singular or too ill-conditioned to trust.
    #[error("singular linear system{}", match .condition {
        Some(c) => format!(" (condition estimate {c:.3e})"),
        None => String::new(),
    })]
    SingularSystem { condition: Option<f64> },

    /// A closed-form denominator sits on a pole of the linearized expansion.
    #[error("pole encountered in `{0}`")]
    PoleEncountered(&'static str),

    /// Figure id not in the preset table.
    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    /// IO error with the offending path attached.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Config file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
