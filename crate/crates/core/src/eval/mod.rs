//! Benchmark harness: instances, ranking metrics, failure taxonomy,
//! synthetic data and report tables.

pub mod bench;
pub mod errors;
pub mod instances;
pub mod metrics;
pub mod report;
pub mod synth;

pub use bench::{run_benchmark, score_ranking, standard_configs, BenchOptions, BenchmarkRun};
pub use errors::{classify, infer_seeds, ErrorBreakdown, ErrorCategory, Outcome};
pub use instances::{load_instances, resolve_instances, write_instances, EvalInstance, InstanceError};
pub use metrics::{average_precision, ndcg_at, recall_at};
pub use report::{Metric, MetricsReport, ReportRow, CUTOFFS};
pub use synth::{generate_synthetic, SynthConfig, SynthError, SyntheticBenchmark};
