//! Run configuration, calibration and the end-to-end pipelines behind the CLI:
//! build-table → train → evaluate → validate, plus single simulations.

mod calibrate;
mod config;
mod pipelines;
mod validation;

use std::path::PathBuf;

use thiserror::Error;

pub use calibrate::{
    annotate, assess, calibrate, offset_extremes, CalibrationMetrics, CalibrationReport, CalibrationTargets,
};
pub use config::{EvaluationSettings, Paths, RunConfig, VALIDATION_ANGLES};
pub use pipelines::{
    build_table, evaluate_agent, evaluation_scenarios, load_agent, network_path, simulate, spot_check,
    train_agent, training_log_path, AgentMeta, BuildSummary, SimulateRequest, SimulateOutcome,
};
pub use validation::{
    load_baseline, validate, write_summary, Stats3, ValidationReport, ValidationRow, BASELINE_HEADER,
};

use crate::circuit::CircuitError;
use crate::environment::EnvError;
use crate::flux_data::FluxDataError;
use crate::rl::RlError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("calibration failed; best candidate: {0}")]
    CalibrationFailed(Box<CalibrationReport>),
    #[error("network {path} was trained for circuit {found}, current circuit is {expected}")]
    FingerprintMismatch { path: PathBuf, expected: String, found: String },
    #[error("spot check failed at row {row}, column {col}: cached {cached}, simulated {direct}")]
    SpotCheck { row: usize, col: usize, cached: f64, direct: f64 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    FluxData(#[from] FluxDataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
