use std::io;

use thiserror::Error;

/// Errors produced by the queue, model, calibration and benchmark layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("outside model domain: {0}")]
    Domain(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("benchmark error: {0}")]
    Benchmark(String),

    #[error("not available: {0}")]
    NotAvailable(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
