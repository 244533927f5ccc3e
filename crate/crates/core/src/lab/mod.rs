//! Run configuration, validation, system summaries and the experiment
//! runner that writes reports to disk.

mod config;
mod describe;
mod export;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::experiments::ExperimentError;
use crate::skew::SkewError;

pub use config::{Caps, ExperimentKind, GridConfig, RunConfig, SystemSpec, BUNDLED_DEFAULT};
pub use describe::{describe, SystemSummary, DESCRIBE_PERIOD_CAP};
pub use export::basin_layer_pgm;
pub use run::{
    run, run_experiment, BasinsOutput, ExperimentOutput, ExperimentRecord, ExponentsReport, FileRecord,
    Manifest, QuadratureEntry, RunStatus, MANIFEST_FILE,
};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config at `{path}`: {reason}")]
    ConfigInvalid {
        path: String,
        reason: String,
        #[source]
        cause: Option<SkewError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("experiment `{name}` failed: {source}")]
    Experiment {
        name: &'static str,
        #[source]
        source: ExperimentError,
    },
    #[error("serialization: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }
}
