use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Particle surface concentration left (0, cs_max).
    #[error("particle saturated ({context}): c_surf = {c_surf:.6e}, cs_max = {cs_max:.6e}")]
    Saturation {
        context: String,
        c_surf: f64,
        cs_max: f64,
    },

    #[error("residual assembly failed: non-finite value in block {block} at index {index}")]
    Assembly { block: &'static str, index: usize },

    #[error("initialization failed: {0}")]
    Init(String),

    #[error("solver failed at t = {t:.6e} s (h = {h:.3e}): {reason}")]
    Solver { t: f64, h: f64, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("optimization error: {0}")]
    Optimization(String),

    #[error("{path}: row {row}: {msg}")]
    Load {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    /// Simulation error annotated with where in a profile it happened.
    #[error("segment {segment} (t = {t:.3} s): {source}")]
    Segment {
        segment: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
