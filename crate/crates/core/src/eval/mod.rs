// SPDX-License-Identifier: Apache-2.0

//! Splits, metrics and end-to-end experiments.

mod experiment;
mod metrics;
mod split;

pub use experiment::{
    plan_runs, run_experiment, run_experiment_with, scores_csv, train_run, EvalReport, ExperimentSpec,
    PlannedRun, Progress, RunOptions, RunOutcome, ScoredSegment, SplitConfig, TrainedRun,
};
pub use metrics::{
    auc, eer, f1_at_eer, f1_at_threshold, false_negative_rate, false_positive_rate, roc_csv, roc_curve,
    EqualErrorRate, Metrics, RocPoint,
};
pub use split::{
    balance_groups, default_fold_count, split_setting1, split_setting2, Fold, Setting, SplitPlan,
};
