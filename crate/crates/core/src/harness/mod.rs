//! Experiment protocols: batch-incremental active learning with noisy
//! annotation, pseudo labeling, the fixed-count detection comparison and
//! noise-rate/threshold sweeps.

mod active;
mod config;
mod data;
mod output;
mod suite;
mod sweep;

pub use active::{run_active_learning, run_id, run_pseudo, select_informative, BatchLog, ExperimentLog};
pub use config::{DatasetSpec, ExperimentConfig, Mode, NoiseModel, Selection};
pub use data::{fold_count, load_dataset, prepare, split, Prepared};
pub use output::{
    learning_summary, results_csv, suite_csv, suite_summary, sweep_csv, to_json, LearningSummary, ModeSummary, Stat,
    SuiteSummary, SuiteSummaryRow, RESULTS_HEADER,
};
pub use suite::{run_detection_suite, Method, SuiteRow};
pub use sweep::{sweep, SweepOutcome, SweepRow};
