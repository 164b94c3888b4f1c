use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model data: {0}")]
    InvalidModel(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate exciton energies {e1:.4} and {e2:.4} cm^-1 (gap below {tol} cm^-1)")]
    Degenerate { e1: f64, e2: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("excited-state population {0:e} below normalization threshold")]
    NoExcitation(f64),

    #[error("field is identically zero")]
    ZeroField,

    #[error("integration failed at t = {t} fs: {reason}")]
    Integration { t: f64, reason: String },

    #[error("fit did not converge: {0}")]
    FitFailed(String),

    #[error("empty reference set")]
    EmptyReference,

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse model file: {0}")]
    Parse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
