//! Experiment orchestration: configuration, analyses, sweeps, simulation
//! campaigns, cross-validation and β optimization.

pub mod config;
pub mod experiment;
pub mod optimize;
pub mod output;

pub use config::{load_config, ExperimentConfig, OutputFormat, Scale, SweepAxis, SweepParam};
pub use experiment::{
    analyze_point, run_analyze, run_simulate, run_sweep, run_validate, validation_report, AnalyticPoint, SimulatedPoint,
};
pub use optimize::optimize_beta;
pub use output::{
    csv_header, read_csv, write_csv, BetaEvaluation, Engine, Envelope, Optimization, Percentile, PointFailure,
    ResultRow, RowOutcome, ValidationReport,
};
