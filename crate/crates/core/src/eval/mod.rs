//! Metrics, bootstrap intervals, model selection and sweep experiments.

mod metrics;
mod select;
mod sweep;

pub use metrics::{auroc, auroc_ci, bootstrap_ci, evaluate, mean_ci, BootstrapOptions, EvaluationReport, Interval};
pub use select::{
    select_model, select_with_mode, Candidate, SelectionMode, SelectionResult, AUROC_FRACTION, NEAR_ZERO_RHO,
};
pub use sweep::{cross_validate, sweep, sweep_csv, train_select, Pipeline, SweepConfig, SweepRow, TrainOutcome};
