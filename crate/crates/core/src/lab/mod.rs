//! Experiment orchestration: configuration, convergence sweeps, rate fits
//! and report files.

mod config;
mod report;
mod sweep;

pub use config::{ExperimentConfig, Tolerances, DEFAULT_CONFIG};
pub use report::{emit_report, read_csv, ReportFormat};
pub use sweep::{
    evaluate_geodesic, fit_rate, run_convergence, ConvergenceReport, FittedRates, RateFit, INTERIOR,
};
