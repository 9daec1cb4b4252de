//! Query-time retrieval: first-pass search, optional rerank, and dependency
//! expansion into a single capped tool list.

pub mod accuracy;
pub mod hybrid;
pub mod rerank;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::{render_tool_document, EmbedError, Embedder, ToolDocument};
use crate::graph::{GraphError, ToolKnowledgeGraph, ToolNode};
use crate::lexical::LexicalIndex;
use crate::ranking::{IndexError, ScoredDoc};
use crate::vector::VectorIndex;

pub use accuracy::{expected_accuracy, AccuracyError, AccuracyEstimate, AccuracyModel};
pub use hybrid::{hybrid_search, hybrid_search_with, Fusion};
pub use rerank::{
    IdentityReranker, LlmReranker, OracleReranker, QueryContext, RerankOutcome, Reranker,
    RerankerKind,
};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("invalid retrieval configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Lexical,
    Vector,
    Hybrid,
    GraphFusion,
}

impl FromStr for Mode {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexical" | "bm25" => Ok(Mode::Lexical),
            "vector" => Ok(Mode::Vector),
            "hybrid" => Ok(Mode::Hybrid),
            "graph_fusion" | "graph-fusion" | "grtf" => Ok(Mode::GraphFusion),
            other => Err(RetrievalError::Config(format!(
                "unknown mode `{other}` (expected lexical, vector, hybrid or graph_fusion)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Lexical => "lexical",
            Mode::Vector => "vector",
            Mode::Hybrid => "hybrid",
            Mode::GraphFusion => "graph_fusion",
        })
    }
}

/// First-pass search used to pick seeds in graph fusion mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstPass {
    Lexical,
    Vector,
    #[default]
    Hybrid,
}

impl FromStr for FirstPass {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexical" | "bm25" => Ok(FirstPass::Lexical),
            "vector" => Ok(FirstPass::Vector),
            "hybrid" => Ok(FirstPass::Hybrid),
            other => Err(RetrievalError::Config(format!(
                "unknown first pass `{other}` (expected lexical, vector or hybrid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryTransform {
    Identity,
}

impl QueryTransform {
    pub fn apply(self, query: &str) -> String {
        match self {
            QueryTransform::Identity => query.to_string(),
        }
    }
}

impl FromStr for QueryTransform {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(QueryTransform::Identity),
            other => Err(RetrievalError::Config(format!(
                "unknown query transform `{other}` (expected identity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    pub mode: Mode,
    pub first_pass: FirstPass,
    /// Size of the first-pass search (seed count in graph fusion mode).
    pub top_k: usize,
    /// How many first-pass candidates the reranker sees; all of them when `None`.
    pub rerank_top_k: Option<usize>,
    pub final_top_k: usize,
    /// Dependencies taken per seed, counted in DFS order before deduplication.
    pub d_limit: usize,
    /// Weight on the vector side of hybrid fusion.
    pub alpha: f64,
    pub fusion: Fusion,
    pub query_transform: Option<QueryTransform>,
    pub reranker: Option<RerankerKind>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            mode: Mode::GraphFusion,
            first_pass: FirstPass::Hybrid,
            top_k: 3,
            rerank_top_k: None,
            final_top_k: 30,
            d_limit: 10,
            alpha: 0.8,
            fusion: Fusion::MinMax,
            query_transform: None,
            reranker: None,
        }
    }
}

impl RetrievalConfig {
    pub fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let bad = |m: String| Err(RetrievalError::Config(m));
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        if self.final_top_k == 0 {
            return bad("final_top_K must be at least 1".into());
        }
        if let Some(r) = self.rerank_top_k {
            if r > self.top_k {
                return bad(format!("rerank_top_k ({r}) exceeds top_k ({})", self.top_k));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must be in [0, 1], got {}", self.alpha));
        }
        if let Fusion::ReciprocalRank { c } = self.fusion {
            if !(c.is_finite() && c >= 0.0) {
                return bad(format!("reciprocal rank constant must be >= 0, got {c}"));
            }
        }
        Ok(())
    }

    fn first_pass_kind(&self) -> FirstPass {
        match self.mode {
            Mode::Lexical => FirstPass::Lexical,
            Mode::Vector => FirstPass::Vector,
            Mode::Hybrid => FirstPass::Hybrid,
            Mode::GraphFusion => self.first_pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// A first-pass result (a seed of the graph expansion).
    VectorSeed,
    Dependency,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::VectorSeed => "seed",
            Provenance::Dependency => "dependency",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedEntry {
    pub tool_id: String,
    pub provenance: Provenance,
    /// The seed whose turn added this entry; equals `tool_id` for seeds.
    pub seed_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RankedToolList {
    pub entries: Vec<RankedEntry>,
    /// True when assembly produced more than `final_top_K` entries.
    pub truncated: bool,
}

impl RankedToolList {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.tool_id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Everything a query produced, kept for error analysis.
#[derive(Debug, Clone, Default)]
pub struct RetrievalTrace {
    /// First-pass ranking before rerank.
    pub first_pass: Vec<ScoredDoc>,
    /// First-pass ids after rerank; the seeds in graph fusion mode.
    pub seeds: Vec<String>,
    pub rerank_fallback: bool,
    pub list: RankedToolList,
}

/// Appends `seeds` and up to `d_limit` DFS dependencies of each, skipping ids
/// already present, and caps the result at `final_top_k`.
pub fn assemble(
    graph: &ToolKnowledgeGraph,
    seeds: &[String],
    d_limit: usize,
    final_top_k: usize,
) -> Result<RankedToolList, GraphError> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut entries = Vec::new();
    for seed in seeds {
        if entries.len() > final_top_k {
            break;
        }
        if seen.insert(seed.clone()) {
            entries.push(RankedEntry {
                tool_id: seed.clone(),
                provenance: Provenance::VectorSeed,
                seed_id: seed.clone(),
            });
        }
        for dep in graph.dependencies_dfs(seed, d_limit)? {
            if seen.insert(dep.clone()) {
                entries.push(RankedEntry {
                    tool_id: dep,
                    provenance: Provenance::Dependency,
                    seed_id: seed.clone(),
                });
            }
        }
    }
    let truncated = entries.len() > final_top_k;
    entries.truncate(final_top_k);
    Ok(RankedToolList { entries, truncated })
}

/// Immutable indexes over one tool corpus; safe to query from many threads.
pub struct RetrievalEngine {
    graph: Arc<ToolKnowledgeGraph>,
    lexical: LexicalIndex,
    vectors: VectorIndex,
    embedder: Arc<dyn Embedder>,
    remote_reranker: Option<Arc<dyn Reranker>>,
}

impl RetrievalEngine {
    /// Renders and embeds every tool, then builds both indexes.
    pub fn build(
        graph: Arc<ToolKnowledgeGraph>,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self, RetrievalError> {
        let docs: Vec<ToolDocument> = graph.nodes().map(render_tool_document).collect();
        let vectors = docs
            .par_iter()
            .map(|d| Ok((d.tool_id.clone(), embedder.embed(&d.text)?)))
            .collect::<Result<Vec<_>, EmbedError>>()?;
        let lexical = LexicalIndex::build(&docs)?;
        let vectors = VectorIndex::build(vectors)?;
        Ok(Self::from_parts(graph, lexical, vectors, embedder))
    }

    pub fn from_parts(
        graph: Arc<ToolKnowledgeGraph>,
        lexical: LexicalIndex,
        vectors: VectorIndex,
        embedder: Arc<dyn Embedder>,
    ) -> Self {
        Self {
            graph,
            lexical,
            vectors,
            embedder,
            remote_reranker: None,
        }
    }

    /// Reranker used when a config asks for [`RerankerKind::Remote`].
    pub fn with_remote_reranker(mut self, reranker: Arc<dyn Reranker>) -> Self {
        self.remote_reranker = Some(reranker);
        self
    }

    pub fn graph(&self) -> &ToolKnowledgeGraph {
        &self.graph
    }

    pub fn lexical(&self) -> &LexicalIndex {
        &self.lexical
    }

    pub fn vectors(&self) -> &VectorIndex {
        &self.vectors
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn retrieve(
        &self,
        query: &str,
        cfg: &RetrievalConfig,
    ) -> Result<RankedToolList, RetrievalError> {
        Ok(self
            .retrieve_with(query, cfg, &QueryContext::default())?
            .list)
    }

    pub fn retrieve_with(
        &self,
        query: &str,
        cfg: &RetrievalConfig,
        ctx: &QueryContext<'_>,
    ) -> Result<RetrievalTrace, RetrievalError> {
        cfg.validate()?;
        let reranker = self.reranker_for(cfg)?;
        if self.graph.is_empty() {
            return Ok(RetrievalTrace::default());
        }
        let query = match cfg.query_transform {
            Some(t) => t.apply(query),
            None => query.to_string(),
        };
        let depth = match cfg.mode {
            Mode::GraphFusion => cfg.top_k,
            _ => cfg.top_k.max(cfg.final_top_k),
        };
        let first_pass = self.first_pass(&query, cfg, depth)?;
        let mut ids: Vec<String> = first_pass.iter().map(|d| d.id.clone()).collect();

        let mut rerank_fallback = false;
        if let Some(reranker) = reranker {
            let n = cfg.rerank_top_k.unwrap_or(cfg.top_k).min(ids.len());
            let candidates: Vec<&ToolNode> = ids[..n]
                .iter()
                .map(|id| self.graph.node(id).ok_or_else(|| GraphError::UnknownTool(id.clone())))
                .collect::<Result<_, _>>()?;
            let outcome = reranker.rerank(&query, &candidates, ctx)?;
            check_permutation(&outcome.order, n)?;
            rerank_fallback = outcome.fallback;
            let head: Vec<String> = outcome.order.iter().map(|&i| ids[i].clone()).collect();
            ids.splice(..n, head);
        }

        let list = match cfg.mode {
            Mode::GraphFusion => assemble(&self.graph, &ids, cfg.d_limit, cfg.final_top_k)?,
            _ => RankedToolList {
                truncated: ids.len() > cfg.final_top_k,
                entries: ids
                    .iter()
                    .take(cfg.final_top_k)
                    .map(|id| RankedEntry {
                        tool_id: id.clone(),
                        provenance: Provenance::VectorSeed,
                        seed_id: id.clone(),
                    })
                    .collect(),
            },
        };
        Ok(RetrievalTrace {
            first_pass,
            seeds: ids,
            rerank_fallback,
            list,
        })
    }

    fn reranker_for(&self, cfg: &RetrievalConfig) -> Result<Option<&dyn Reranker>, RetrievalError> {
        Ok(match cfg.reranker {
            None => None,
            Some(RerankerKind::Identity) => Some(&IdentityReranker),
            Some(RerankerKind::Oracle) => Some(&OracleReranker),
            Some(RerankerKind::Remote) => Some(
                self.remote_reranker
                    .as_deref()
                    .ok_or_else(|| {
                        RetrievalError::Config("remote reranker requested but not configured".into())
                    })?,
            ),
        })
    }

    fn first_pass(
        &self,
        query: &str,
        cfg: &RetrievalConfig,
        depth: usize,
    ) -> Result<Vec<ScoredDoc>, RetrievalError> {
        Ok(match cfg.first_pass_kind() {
            FirstPass::Lexical => self.lexical.search(query, depth),
            FirstPass::Vector => {
                let q = self.embedder.embed(query)?;
                self.vectors.search(&q, depth)?
            }
            FirstPass::Hybrid => {
                let q = self.embedder.embed(query)?;
                hybrid_search_with(
                    &self.lexical,
                    &self.vectors,
                    query,
                    &q,
                    depth,
                    cfg.alpha,
                    cfg.fusion,
                )?
            }
        })
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<(), RetrievalError> {
    let mut seen = vec![false; n];
    let ok = order.len() == n
        && order
            .iter()
            .all(|&i| i < n && !std::mem::replace(&mut seen[i], true));
    if ok {
        Ok(())
    } else {
        Err(RetrievalError::Config(format!(
            "reranker returned {order:?}, not a permutation of {n} candidates"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashEmbedder;
    use crate::graph::{DependencyEdge, Relation, ToolKind};

    fn node(id: &str, description: &str) -> ToolNode {
        ToolNode {
            id: id.into(),
            name: id.into(),
            description: description.into(),
            kind: ToolKind::Regular,
            parameters: vec![],
        }
    }

    fn edge(s: &str, t: &str) -> DependencyEdge {
        DependencyEdge {
            source: s.into(),
            target: t.into(),
            relation: Relation::ToolDirect,
            reason: String::new(),
            parameter_name: None,
        }
    }

    fn graph(ids: &[&str], edges: &[(&str, &str)]) -> ToolKnowledgeGraph {
        ToolKnowledgeGraph::from_raw_parts(
            ids.iter().map(|i| node(i, "x")).collect(),
            edges.iter().map(|(s, t)| edge(s, t)).collect(),
        )
    }

    fn seeds(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn seeds_then_their_dependencies() {
        let g = graph(&["X", "Y", "a", "b"], &[("X", "a"), ("Y", "b")]);
        let out = assemble(&g, &seeds(&["X", "Y"]), 10, 10).unwrap();
        assert_eq!(out.ids(), ["X", "a", "Y", "b"]);
        assert!(!out.truncated);
        assert_eq!(out.entries[1].provenance, Provenance::Dependency);
        assert_eq!(out.entries[1].seed_id, "X");
        assert_eq!(out.entries[3].seed_id, "Y");
    }

    #[test]
    fn seed_already_added_as_dependency() {
        let g = graph(&["X", "Y", "a"], &[("X", "Y"), ("X", "a")]);
        let out = assemble(&g, &seeds(&["X", "Y"]), 10, 10).unwrap();
        assert_eq!(out.ids(), ["X", "Y", "a"]);
        assert_eq!(out.entries[1].provenance, Provenance::Dependency);
    }

    #[test]
    fn truncation_drops_later_seeds() {
        let g = graph(&["X", "Y", "a"], &[("X", "a")]);
        let out = assemble(&g, &seeds(&["X", "Y"]), 10, 2).unwrap();
        assert_eq!(out.ids(), ["X", "a"]);
        assert!(out.truncated);
    }

    #[test]
    fn d_limit_counts_before_dedup() {
        // X's first dependency is Y, already present as an earlier seed
        let g = graph(&["X", "Y", "a", "b"], &[("X", "Y"), ("X", "a"), ("X", "b")]);
        let out = assemble(&g, &seeds(&["Y", "X"]), 2, 10).unwrap();
        assert_eq!(out.ids(), ["Y", "X", "a"]);
    }

    fn engine() -> RetrievalEngine {
        let g = ToolKnowledgeGraph::from_raw_parts(
            vec![
                node("get_stock_price", "current stock price for a ticker symbol"),
                node("get_current_date", "today's date"),
                node("search_ticker", "look up ticker symbol for a company name"),
                node("send_email", "send an email message"),
            ],
            vec![
                edge("get_stock_price", "search_ticker"),
                edge("get_stock_price", "get_current_date"),
            ],
        );
        RetrievalEngine::build(Arc::new(g), Arc::new(HashEmbedder::default())).unwrap()
    }

    #[test]
    fn graph_fusion_expands_the_top_seed() {
        let e = engine();
        let cfg = RetrievalConfig {
            top_k: 1,
            ..RetrievalConfig::default()
        };
        let out = e.retrieve("current stock price of Apple", &cfg).unwrap();
        assert_eq!(
            out.ids(),
            ["get_stock_price", "search_ticker", "get_current_date"]
        );
    }

    #[test]
    fn vector_mode_equals_vector_search() {
        let e = engine();
        let cfg = RetrievalConfig {
            final_top_k: 3,
            ..RetrievalConfig::with_mode(Mode::Vector)
        };
        let q = "send a message";
        let out = e.retrieve(q, &cfg).unwrap();
        let qv = e.embedder().embed(q).unwrap();
        let direct: Vec<String> = e.vectors().search(&qv, 3).unwrap().into_iter().map(|d| d.id).collect();
        assert_eq!(out.ids(), direct.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(!out.truncated);
    }

    #[test]
    fn config_errors() {
        let e = engine();
        let mut cfg = RetrievalConfig {
            rerank_top_k: Some(5),
            ..RetrievalConfig::default()
        };
        assert!(matches!(e.retrieve("q", &cfg), Err(RetrievalError::Config(_))));
        cfg.rerank_top_k = None;
        cfg.alpha = 1.5;
        assert!(matches!(e.retrieve("q", &cfg), Err(RetrievalError::Config(_))));
        cfg.alpha = 0.8;
        cfg.reranker = Some(RerankerKind::Remote);
        assert!(matches!(e.retrieve("q", &cfg), Err(RetrievalError::Config(_))));
        assert!("rewrite".parse::<QueryTransform>().is_err());
        assert!("naive".parse::<Mode>().is_err());
    }

    #[test]
    fn empty_corpus_gives_empty_list() {
        let e = RetrievalEngine::build(
            Arc::new(ToolKnowledgeGraph::from_raw_parts(vec![], vec![])),
            Arc::new(HashEmbedder::default()),
        )
        .unwrap();
        let out = e.retrieve("anything", &RetrievalConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn rerank_tail_is_untouched() {
        let e = engine();
        let golden: HashSet<String> = ["send_email".to_string()].into();
        let cfg = RetrievalConfig {
            mode: Mode::Vector,
            top_k: 4,
            rerank_top_k: Some(4),
            final_top_k: 4,
            reranker: Some(RerankerKind::Oracle),
            ..RetrievalConfig::default()
        };
        let trace = e
            .retrieve_with(
                "stock price ticker",
                &cfg,
                &QueryContext {
                    golden: Some(&golden),
                },
            )
            .unwrap();
        assert_eq!(trace.seeds[0], "send_email");
        let mut before: Vec<&str> = trace.first_pass.iter().map(|d| d.id.as_str()).collect();
        before.retain(|id| *id != "send_email");
        assert_eq!(&trace.seeds[1..], before.as_slice());
    }
}
