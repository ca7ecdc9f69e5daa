use std::path::PathBuf;

use thiserror::Error;

use legible_core::fixtures::FixtureError;
use legible_core::irl::IrlError;
use legible_core::legible::LegibleError;
use legible_core::lmdp::LmdpError;
use legible_core::maze::MazeError;
use legible_core::mdp::MdpError;
use legible_core::metrics::MetricsError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error(transparent)]
    Solver(#[from] MdpError),
    #[error(transparent)]
    Legible(#[from] LegibleError),
    #[error(transparent)]
    Lmdp(#[from] LmdpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Irl(#[from] IrlError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("configuration {config} has {available} paired successes, fewer than the quota of {quota}")]
    InsufficientSamples {
        config: String,
        available: usize,
        quota: usize,
    },
    #[error(transparent)]
    Schema(#[from] crate::episodes::SchemaError),
    #[error(transparent)]
    Responses(#[from] crate::responses::ResponseError),
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
