//! Thresholding, classification metrics, and cross-dataset model comparison.

mod metrics;
mod ranking;
mod threshold;

pub use metrics::{auc, compute_metrics, ConfusionCounts, EvalReport, Metric, Metrics};
pub use ranking::{
    build_rank_table, cumulative_ranking, pairwise_wins, write_pairwise_csv, write_rank_sums_csv,
    write_reports_csv, RankTable,
};
pub use threshold::{apply_threshold, parse_threshold_strategy, ThresholdStrategy};
