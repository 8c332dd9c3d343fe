//! Benchmark harness for `mnru-index`: dataset I/O, exact ground truth,
//! recall evaluation and the update scenarios.

pub mod dataset;
pub mod error;
pub mod ground_truth;
pub mod scenario;
pub mod vecs;

pub use dataset::{synthetic, DatasetSource, SyntheticKind};
pub use error::{BenchError, Result};
pub use ground_truth::{brute_force_gt, live_gt, mean_recall, recall_at_k, search_eval, EvalPoint};
pub use scenario::{
    run_scenario, write_metrics_csv, MetricsRecord, ScenarioConfig, ScenarioKind, ScenarioRun,
    METRICS_CSV_HEADER,
};
