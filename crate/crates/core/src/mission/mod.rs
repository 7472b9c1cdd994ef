//! The closed-loop mission: transit on a fixed heading until the vehicle
//! reaches the front, then sense, estimate, filter, command and step once per
//! tick until the duration elapses or the vehicle leaves the field.

mod config;
mod log;
mod metrics;
mod runner;

use thiserror::Error;

use crate::estimators::EstimatorError;
use crate::field::{FieldError, GridIoError};
use crate::gp::GpError;
pub use config::{FieldSource, GridSource, MissionConfig, ResolvedMission};
pub use log::{
    read_records_csv, read_records_jsonl, write_records_csv, MissionLog, MissionOutcome,
    MissionRecord, Mode, CSV_HEADER,
};
pub use metrics::{metrics, metrics_from_records, MetricsOptions, MetricsReport, Stats};
pub use runner::{run, run_resolved, run_with_registry};

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("invalid mission config: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Grid(#[from] GridIoError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("{path}: {message}")]
    KernelFile { path: String, message: String },
    #[error("{0}")]
    Metrics(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
