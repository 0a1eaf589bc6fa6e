//! Experiment runner: test signals, configurations, risk reports and sweeps.

pub mod config;
pub mod experiment;
pub mod signals;

pub use config::{log_grid, Arm, ExperimentConfig, MatrixSpec, SignalKind, SignalSpec, SweepAxis};
pub use experiment::{
    run_configured, run_experiment, summarize, sweep, tau_scale, write_sweep_csv, ArmSummary, RiskReport,
    RunRecord, ROWS_CSV_HEADER, SWEEP_CSV_HEADER,
};
pub use signals::make_test_signal;
