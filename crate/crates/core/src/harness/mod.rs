//! Experiment harness: configuration, pipeline, persistence and export.

pub mod config;
pub mod pipeline;
pub mod record;
pub mod report;
pub mod store;

pub use config::{AlphaSpec, ExperimentConfig, SweepGrid};
pub use pipeline::{run_criteria, run_sweep, solve, SweepSummary};
pub use record::{RunRecord, RunStatus, SolverDiagnostics, Stage, StageError};
pub use report::{export, read_csv, record_rows, table_rows, write_csv, CsvRow};
pub use store::RecordStore;
