use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Model, layout or config values that cannot describe a valid building or run.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unstable time step: zone {zone} ('{zone_name}') requires dt <= {max_dt:.3} s, got {dt:.3} s")]
    Unstable {
        zone: usize,
        zone_name: String,
        max_dt: f64,
        dt: f64,
    },

    #[error("unknown {kind} '{id}'")]
    UnknownAsset { kind: &'static str, id: String },

    #[error("ingestion error in {source_name} at row {row}: {message}")]
    Ingestion {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("lifecycle error: {0}")]
    Lifecycle(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    /// A run of a multi-run experiment failed; completed runs are under `partial`.
    #[error("run {run} failed{}: {source}", partial.as_ref().map(|p| format!(" (partial results in {})", p.display())).unwrap_or_default())]
    RunFailed {
        run: usize,
        partial: Option<PathBuf>,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Stable machine-readable tag used by the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Unstable { .. } => "unstable_step",
            Error::UnknownAsset { .. } => "unknown_asset",
            Error::Ingestion { .. } => "ingestion",
            Error::Validation(_) => "validation",
            Error::Lifecycle(_) => "lifecycle",
            Error::Optimizer(_) => "optimizer",
            Error::RunFailed { .. } => "run_failed",
            Error::Io { .. } => "io",
            Error::Json { .. } => "parse",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
