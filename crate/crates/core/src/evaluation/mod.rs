//! Metrics, reports and system comparisons.

pub mod compare;
pub mod metrics;
pub mod report;

pub use compare::{
    contingency_cells, contingency_delta, disagreement_sample, ContingencyCells, ContingencyDelta,
    DisagreementSample, Predictions,
};
pub use metrics::{
    accuracy, aggregate, average_ranks, f1, pearson, spearman, Aggregate, BinaryCounts, Correlation, Prf,
};
pub use report::{
    prediction_rows, report_from_predictions, spr_report, MetricRow, MetricsReport, PredictionRow,
    PropertyMetrics,
};
