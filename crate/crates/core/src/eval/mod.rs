//! Metrics, the method variants, sweeps and planted benchmark data.

mod harness;
mod metrics;
mod planted;

pub use harness::{
    csv_rows, downsample_to_ratio, run_method, run_node_once, sweep, task_ratio, ExperimentConfig,
    MethodSpec, MetricReport, NodeRun, RepeatResult, ResultSummary, SummaryCell, SweepAxis,
    SweepCell, SweepSpec, TaskKind, CSV_HEADER, DEFAULT_OS_GRID, DEFAULT_RATIO_GRID,
    RATIO_TOLERANCE,
};
pub use metrics::{auc_pr, auc_roc};
pub use planted::{generate_planted_dataset, PlantedDatasetSpec, PLANTED_TARGET};
