use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::errors::{classify, infer_seeds, ErrorBreakdown, Outcome};
use super::instances::EvalInstance;
use super::metrics::{average_precision, ndcg_at, recall_at};
use super::report::{MetricGrid, MetricsReport, ReportRow, CUTOFFS};
use crate::retrieval::{Mode, QueryContext, RerankerKind, RetrievalConfig, RetrievalEngine, RetrievalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Final list cap used for every config.
    pub final_top_k: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            jobs: None,
            final_top_k: CUTOFFS[CUTOFFS.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceFailure {
    pub label: String,
    pub instance_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub ranked: Vec<String>,
    pub metrics: MetricGrid,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRun {
    pub report: MetricsReport,
    pub breakdowns: Vec<(String, ErrorBreakdown)>,
    pub failures: Vec<InstanceFailure>,
    /// Per config, per instance, in input order; `None` where retrieval failed.
    pub results: Vec<Vec<Option<InstanceResult>>>,
}

/// All metrics at all cutoffs for one ranking.
pub fn score_ranking<S: AsRef<str>>(ranked: &[S], golden: &HashSet<String>) -> MetricGrid {
    let mut grid = [[0.0; 3]; 3];
    for (c, &n) in CUTOFFS.iter().enumerate() {
        grid[0][c] = average_precision(ranked, golden, n);
        grid[1][c] = recall_at(ranked, golden, n);
        grid[2][c] = ndcg_at(ranked, golden, n);
    }
    grid
}

fn evaluate(
    engine: &RetrievalEngine,
    inst: &EvalInstance,
    cfg: &RetrievalConfig,
) -> Result<InstanceResult, RetrievalError> {
    let golden = inst.golden_set();
    let ctx = QueryContext {
        golden: Some(&golden),
    };
    let trace = engine.retrieve_with(&inst.query, cfg, &ctx)?;
    let seeds = match &inst.seed {
        Some(s) => vec![s.clone()],
        None => infer_seeds(engine.graph(), &inst.golden_tools),
    };
    let ranked: Vec<String> = trace.list.ids().into_iter().map(str::to_string).collect();
    Ok(InstanceResult {
        instance_id: inst.id.clone(),
        metrics: score_ranking(&ranked, &golden),
        outcome: classify(&golden, &seeds, &trace, cfg),
        ranked,
    })
}

/// Runs every config over every instance and averages the metrics.
///
/// Instances whose retrieval fails are counted in [`ReportRow::failed`] and
/// listed in [`BenchmarkRun::failures`]. Results are independent of `jobs`.
pub fn run_benchmark(
    engine: &RetrievalEngine,
    instances: &[EvalInstance],
    configs: &[(String, RetrievalConfig)],
    opts: BenchOptions,
) -> Result<BenchmarkRun, RetrievalError> {
    for (_, cfg) in configs {
        cfg.validate()?;
    }
    let pool = match opts.jobs {
        Some(j) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| RetrievalError::Config(format!("thread pool: {e}")))?,
        ),
        None => None,
    };

    let mut rows = Vec::with_capacity(configs.len());
    let mut breakdowns = Vec::with_capacity(configs.len());
    let mut failures = Vec::new();
    let mut results = Vec::with_capacity(configs.len());
    for (label, cfg) in configs {
        let cfg = RetrievalConfig {
            final_top_k: opts.final_top_k,
            ..cfg.clone()
        };
        let run = || -> Vec<Result<InstanceResult, RetrievalError>> {
            instances
                .par_iter()
                .map(|inst| evaluate(engine, inst, &cfg))
                .collect()
        };
        let outcomes = match &pool {
            Some(p) => p.install(run),
            None => run(),
        };

        let mut sums = [[0.0; 3]; 3];
        let mut evaluated = 0;
        let mut breakdown = ErrorBreakdown::default();
        let mut per_instance = Vec::with_capacity(instances.len());
        for (inst, outcome) in instances.iter().zip(outcomes) {
            match outcome {
                Ok(r) => {
                    for (m, row) in r.metrics.iter().enumerate() {
                        for (c, v) in row.iter().enumerate() {
                            sums[m][c] += v;
                        }
                    }
                    evaluated += 1;
                    breakdown.record(r.outcome);
                    per_instance.push(Some(r));
                }
                Err(e) => {
                    failures.push(InstanceFailure {
                        label: label.clone(),
                        instance_id: inst.id.clone(),
                        message: e.to_string(),
                    });
                    per_instance.push(None);
                }
            }
        }
        let values = sums.map(|row| row.map(|s| if evaluated == 0 { 0.0 } else { s / evaluated as f64 }));
        rows.push(ReportRow {
            label: label.clone(),
            values,
            evaluated,
            failed: instances.len() - evaluated,
        });
        breakdowns.push((label.clone(), breakdown));
        results.push(per_instance);
    }
    Ok(BenchmarkRun {
        report: MetricsReport {
            instance_count: instances.len(),
            rows,
        },
        breakdowns,
        failures,
        results,
    })
}

/// The retriever lineup of the main comparison table, built from `base`.
///
/// Every row shares `base` except for the mode. A reranked graph fusion row
/// is added when `reranker` is set.
pub fn standard_configs(
    base: &RetrievalConfig,
    reranker: Option<RerankerKind>,
) -> Vec<(String, RetrievalConfig)> {
    let with = |mode: Mode, reranker: Option<RerankerKind>| RetrievalConfig {
        mode,
        reranker,
        ..base.clone()
    };
    let mut rows = vec![
        ("Lexical Search".to_string(), with(Mode::Lexical, None)),
        ("Naive RAG".to_string(), with(Mode::Vector, None)),
        (format!("Hybrid RAG (alpha={})", base.alpha), with(Mode::Hybrid, None)),
        (format!("Graph RAG-Tool Fusion (k={})", base.top_k), with(Mode::GraphFusion, None)),
    ];
    if let Some(r) = reranker {
        rows.push((
            format!("Graph RAG-Tool Fusion (k={}), {r} RR", base.top_k),
            with(Mode::GraphFusion, Some(r)),
        ));
    }
    rows
}
