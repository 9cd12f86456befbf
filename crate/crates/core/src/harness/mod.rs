//! Seeded experiment execution, summary statistics, CSV output, and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod io;
pub mod run;
pub mod stats;

pub use config::{AlgorithmId, DomainId, ExperimentConfig};
pub use io::{read_log, read_log_csv, read_summary, read_summary_csv, write_log, write_log_csv, write_summary, write_summary_csv};
pub use run::{
    run_experiment, run_experiment_with, schema_agent, schema_model, schema_trial, stocks_trial, trial_rng, Execution,
    LogRow, RunLog, StreamRole,
};
pub use stats::{aggregate, mean_std, Field, SummaryRow};
