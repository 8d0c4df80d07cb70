// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its contract.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data has the wrong shape, label or value range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Normalization was fitted on data without dynamic range.
    #[error("degenerate normalization: all training values equal {value}")]
    DegenerateNormalization { value: f32 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid ratio: {0}")]
    InvalidRatio(String),

    /// Training produced a non-finite loss.
    #[error(
        "training diverged at epoch {epoch}, batch {batch} (last finite loss {})",
        last_loss(last_finite_loss)
    )]
    Divergence {
        epoch: usize,
        batch: usize,
        last_finite_loss: Option<f64>,
    },

    /// API misuse, e.g. calling backward twice on the same graph.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An error from one run of a multi-run experiment.
    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    /// An error tagged with the pipeline stage that raised it.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn last_loss(loss: &Option<f64>) -> String {
    loss.map_or_else(|| "none".to_string(), |l| l.to_string())
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }

    pub fn in_run(self, run: usize) -> Self {
        Error::Run {
            run,
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with run and stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Run { source, .. } | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 for configuration errors, 4 for divergence, 3 for
    /// everything data related.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) => 2,
            Error::Divergence { .. } => 4,
            _ => 3,
        }
    }
}
