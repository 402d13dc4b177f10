//! Binary metrics, ROC AUC, single-sample prediction timing and k-fold
//! cross-validation reports.

mod crossval;
mod metrics;
pub mod output;

pub use crossval::{
    crossval_evaluate, evaluate_scores, measure_prediction_time, score_rows, CrossvalOptions, EvaluationReport,
    FoldResult, MetricMeans,
};
pub use metrics::{binary_metrics, roc_auc, BinaryMetrics, ConfusionMatrix, THRESHOLD};
