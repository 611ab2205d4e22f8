//! Active-learning experiments: schedule, querying, pseudo-labelling, retraining,
//! evaluation and multi-seed aggregation.

mod config;
mod curve;
pub mod metrics;
mod runner;

pub use config::{DatasetSource, ExperimentConfig, Strategy};
pub use curve::{
    aggregate_seeds, write_aggregate_csv, write_curves_csv, AggregatePoint, IterationRecord, LearningCurve,
};
pub use metrics::{accuracy, auc, auc_macro, mse, r2, R2_FLOOR};
pub use runner::{evaluate, run_experiment, run_seeds};
