use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building or evaluating meridian surfaces.
#[derive(Debug, Error)]
pub enum GeomError {
    /// Caller supplied inconsistent or malformed arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// A point or parameter lies outside the region where the construction is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Gram-Schmidt or metric step met a (near) lightlike vector or singular metric.
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// The Frenet integrator met a non-finite curvature sample.
    #[error("integration error at v = {v}: {reason}")]
    Integration { v: f64, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GeomError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        GeomError::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        GeomError::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        GeomError::Degenerate(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
