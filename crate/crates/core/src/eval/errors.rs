//! Failure taxonomy for graph-expanded retrieval.
//!
//! An instance succeeds when every golden tool is in the final list. A
//! failure is attributed to the first pass when a seed never made it into
//! the top-k; otherwise to truncation, split by whether a seed was ranked
//! first.

use std::collections::HashSet;

use serde::Serialize;

use crate::graph::ToolKnowledgeGraph;
use crate::retrieval::{RetrievalConfig, RetrievalTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    /// A seed tool is absent from the first-pass top-k.
    SeedNotInTopK,
    /// Seeds are in the top-k but none is first, and golden tools were cut.
    InTopKNotTop1Truncated,
    /// A seed is ranked first, yet golden tools were cut.
    Top1ButTruncated,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 3] = [
        ErrorCategory::SeedNotInTopK,
        ErrorCategory::InTopKNotTop1Truncated,
        ErrorCategory::Top1ButTruncated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::SeedNotInTopK => "seed_not_in_top_k",
            ErrorCategory::InTopKNotTop1Truncated => "in_top_k_not_top_1_truncated",
            ErrorCategory::Top1ButTruncated => "top_1_but_truncated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure(ErrorCategory),
}

/// Golden tools without an incoming edge from another golden tool. Falls back
/// to the first golden tool when every one of them has such an edge.
pub fn infer_seeds(graph: &ToolKnowledgeGraph, golden: &[String]) -> Vec<String> {
    let within: HashSet<&str> = golden.iter().map(String::as_str).collect();
    let targets = graph.targets_within(&within);
    let seeds: Vec<String> = golden
        .iter()
        .filter(|g| !targets.contains(*g))
        .cloned()
        .collect();
    if seeds.is_empty() {
        golden.iter().take(1).cloned().collect()
    } else {
        seeds
    }
}

pub fn classify(
    golden: &HashSet<String>,
    seeds: &[String],
    trace: &RetrievalTrace,
    cfg: &RetrievalConfig,
) -> Outcome {
    let listed: HashSet<&str> = trace.list.ids().into_iter().collect();
    if golden.iter().all(|g| listed.contains(g.as_str())) {
        return Outcome::Success;
    }
    let top_k: Vec<&str> = trace
        .first_pass
        .iter()
        .take(cfg.top_k)
        .map(|d| d.id.as_str())
        .collect();
    if seeds.iter().any(|s| !top_k.contains(&s.as_str())) {
        return Outcome::Failure(ErrorCategory::SeedNotInTopK);
    }
    if trace.seeds.first().is_some_and(|first| seeds.contains(first)) {
        Outcome::Failure(ErrorCategory::Top1ButTruncated)
    } else {
        Outcome::Failure(ErrorCategory::InTopKNotTop1Truncated)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ErrorBreakdown {
    pub instances: usize,
    pub successes: usize,
    pub seed_not_in_top_k: usize,
    pub in_top_k_not_top_1_truncated: usize,
    pub top_1_but_truncated: usize,
}

impl ErrorBreakdown {
    pub fn record(&mut self, outcome: Outcome) {
        self.instances += 1;
        match outcome {
            Outcome::Success => self.successes += 1,
            Outcome::Failure(c) => *self.count_mut(c) += 1,
        }
    }

    fn count_mut(&mut self, c: ErrorCategory) -> &mut usize {
        match c {
            ErrorCategory::SeedNotInTopK => &mut self.seed_not_in_top_k,
            ErrorCategory::InTopKNotTop1Truncated => &mut self.in_top_k_not_top_1_truncated,
            ErrorCategory::Top1ButTruncated => &mut self.top_1_but_truncated,
        }
    }

    pub fn count(&self, c: ErrorCategory) -> usize {
        match c {
            ErrorCategory::SeedNotInTopK => self.seed_not_in_top_k,
            ErrorCategory::InTopKNotTop1Truncated => self.in_top_k_not_top_1_truncated,
            ErrorCategory::Top1ButTruncated => self.top_1_but_truncated,
        }
    }

    pub fn failures(&self) -> usize {
        ErrorCategory::ALL.iter().map(|&c| self.count(c)).sum()
    }

    pub fn rate(&self, c: ErrorCategory) -> f64 {
        ratio(self.count(c), self.instances)
    }

    pub fn success_rate(&self) -> f64 {
        ratio(self.successes, self.instances)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
