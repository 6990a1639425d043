//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "spectral support violation: off-support mass fraction {mass_fraction:.3e} exceeds {tolerance:.1e}"
    )]
    SupportViolation { mass_fraction: f64, tolerance: f64 },

    #[error(
        "numerical instability at step {step} (t = {time:.6}): sup-norm {sup_norm:.3e}, linear phase per step {phase_per_step:.3e}"
    )]
    Instability {
        step: usize,
        time: f64,
        sup_norm: f64,
        phase_per_step: f64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("malformed container: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
