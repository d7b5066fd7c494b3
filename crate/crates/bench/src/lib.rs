//! Experiment plumbing for the `qbai` command-line tool: instance sources,
//! seeded Monte-Carlo studies, scaling sweeps, quantile-search verification
//! and report writers.

pub mod gap_table;
pub mod output;
pub mod scaling;
pub mod source;
pub mod study;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Dist(#[from] qbai::dist::DistError),
    #[error(transparent)]
    Gap(#[from] qbai::gaps::GapError),
    #[error(transparent)]
    Engine(#[from] qbai::engine::EngineError),
    #[error(transparent)]
    QuantEst(#[from] qbai::quantest::QuantEstError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// Package version, recorded in every report.
pub const VERSION: &str = concat!("qbai ", env!("CARGO_PKG_VERSION"));
