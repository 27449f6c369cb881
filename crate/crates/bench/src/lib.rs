//! Experiment harness: configuration, multi-seed runs, grid search,
//! cross-seed reports and two-state diagnostics.

pub mod analyze;
pub mod config;
pub mod experiment;
pub mod grid;
pub mod report;

pub use config::{BuiltEnv, ConfigError, EnvKind, ExperimentConfig, StepSizes};
pub use experiment::{run_experiment, CurveRow, LearningCurve};
pub use grid::{grid_search, GridSpec, SelectionMetric};
