//! Tool knowledge graph: typed tool nodes, typed dependency edges, traversal and
//! corpus statistics.
//!
//! The graph is built once from a KG document and is immutable afterwards, so
//! every read operation can be shared freely across threads.

mod document;
pub mod import;
mod traverse;
mod validate;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use document::{DependencyEntry, GraphDocument, ParameterEntry, ToolEntry};
pub use traverse::DfsIter;
pub use validate::{ValidationReport, Violation};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("parse error at line {line}, column {column} (field `{path}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        path: String,
        message: String,
    },
    #[error("duplicate tool id `{0}`")]
    DuplicateTool(String),
    #[error("tool `{source_id}` depends on unknown target {target}")]
    UnknownTarget { source_id: String, target: String },
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("unrecognized graph document: {0}")]
    Import(String),
    #[error("failed to serialize graph: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolKind {
    Core,
    Regular,
}

impl fmt::Display for ToolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToolKind::Core => "core",
            ToolKind::Regular => "regular",
        })
    }
}

/// The four dependency relation types between tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    /// The tool requires the target tool to operate.
    #[serde(rename = "tool_directly_depends_on")]
    ToolDirect,
    /// The tool benefits from the target tool but can run without it.
    #[serde(rename = "tool_indirectly_depends_on")]
    ToolIndirect,
    /// A parameter must be obtained from the target tool first.
    #[serde(rename = "parameter_directly_depends_on")]
    ParamDirect,
    /// A parameter needs the target tool only for some user inputs.
    #[serde(rename = "parameter_indirectly_depends_on")]
    ParamIndirect,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::ToolDirect,
        Relation::ToolIndirect,
        Relation::ParamDirect,
        Relation::ParamIndirect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::ToolDirect => "tool_directly_depends_on",
            Relation::ToolIndirect => "tool_indirectly_depends_on",
            Relation::ParamDirect => "parameter_directly_depends_on",
            Relation::ParamIndirect => "parameter_indirectly_depends_on",
        }
    }

    /// Whether the relation is about one of the source tool's parameters.
    pub fn is_parameter(self) -> bool {
        matches!(self, Relation::ParamDirect | Relation::ParamIndirect)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = String;

    /// Accepts the canonical names plus case and separator variants
    /// (`PARAMETER_DIRECTLY_DEPENDS_ON`, `tool directly depends on`, `param_direct`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_lowercase()
                } else {
                    '_'
                }
            })
            .collect();
        match norm.as_str() {
            "tool_directly_depends_on" | "tool_direct" | "tool_directly" => Ok(Relation::ToolDirect),
            "tool_indirectly_depends_on" | "tool_indirect" | "tool_indirectly" => {
                Ok(Relation::ToolIndirect)
            }
            "parameter_directly_depends_on" | "param_directly_depends_on" | "param_direct"
            | "parameter_direct" => Ok(Relation::ParamDirect),
            "parameter_indirectly_depends_on" | "param_indirectly_depends_on"
            | "param_indirect" | "parameter_indirect" => Ok(Relation::ParamIndirect),
            _ => Err(format!("unknown relation `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolParameter {
    pub name: String,
    pub description: String,
    /// Free-text type label such as "string" or "number".
    pub value_kind: String,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolNode {
    pub id: String,
    pub name: String,
    pub description: String,
    pub kind: ToolKind,
    pub parameters: Vec<ToolParameter>,
}

impl ToolNode {
    pub fn has_parameter(&self, name: &str) -> bool {
        self.parameters.iter().any(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyEdge {
    pub source: String,
    pub target: String,
    pub relation: Relation,
    pub reason: String,
    /// Set for parameter relations; names a parameter of `source`.
    pub parameter_name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphStats {
    pub total_tools: usize,
    pub core_count: usize,
    pub regular_count: usize,
    /// Mean out-edge count over all nodes; 0 for an empty graph.
    pub avg_dependencies: f64,
}

/// Validated node set plus per-node outgoing edges in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolKnowledgeGraph {
    nodes: IndexMap<String, ToolNode>,
    out_edges: IndexMap<String, Vec<DependencyEdge>>,
    // ids passed more than once to `from_raw_parts`; first occurrence wins
    dropped_duplicates: Vec<String>,
}

static NO_EDGES: Vec<DependencyEdge> = Vec::new();

impl ToolKnowledgeGraph {
    /// Parses a canonical KG document.
    pub fn from_json(bytes: &[u8]) -> Result<Self, GraphError> {
        let doc = parse_document(bytes)?;
        Self::from_document(doc)
    }

    /// Parses a canonical document, falling back to the ToolLinkOS import
    /// adapter when the canonical schema does not match.
    pub fn from_json_auto(bytes: &[u8]) -> Result<Self, GraphError> {
        match parse_document(bytes) {
            Ok(doc) => Self::from_document(doc),
            Err(canonical) => match import::import_document(bytes) {
                Ok(doc) => Self::from_document(doc),
                Err(_) => Err(canonical),
            },
        }
    }

    /// Builds a graph from a parsed document. Duplicate ids and dangling edge
    /// targets are rejected; softer schema violations are left for
    /// [`ToolKnowledgeGraph::validate`].
    pub fn from_document(doc: GraphDocument) -> Result<Self, GraphError> {
        let mut nodes = IndexMap::with_capacity(doc.tools.len());
        let mut out_edges = IndexMap::with_capacity(doc.tools.len());
        let mut pending = Vec::with_capacity(doc.tools.len());
        for entry in doc.tools {
            let id = entry.id.clone().unwrap_or_else(|| entry.name.clone());
            if nodes.contains_key(&id) {
                return Err(GraphError::DuplicateTool(id));
            }
            let node = ToolNode {
                id: id.clone(),
                name: entry.name,
                description: entry.description,
                kind: entry.kind,
                parameters: entry
                    .parameters
                    .into_iter()
                    .map(|p| ToolParameter {
                        name: p.name,
                        description: p.description,
                        value_kind: p.value_kind,
                        required: p.required,
                    })
                    .collect(),
            };
            nodes.insert(id.clone(), node);
            pending.push((id, entry.dependencies));
        }
        for (source, deps) in pending {
            let mut edges = Vec::with_capacity(deps.len());
            for dep in deps {
                if !nodes.contains_key(&dep.target) {
                    return Err(GraphError::UnknownTarget {
                        source_id: source,
                        target: dep.target,
                    });
                }
                edges.push(DependencyEdge {
                    source: source.clone(),
                    target: dep.target,
                    relation: dep.relation,
                    reason: dep.reason,
                    parameter_name: dep.parameter_name,
                });
            }
            out_edges.insert(source, edges);
        }
        Ok(Self {
            nodes,
            out_edges,
            dropped_duplicates: Vec::new(),
        })
    }

    /// Assembles a graph without any checks. Edges are grouped by their
    /// `source` in the order given. Intended for tooling that wants to run
    /// [`ToolKnowledgeGraph::validate`] on arbitrary input.
    pub fn from_raw_parts(nodes: Vec<ToolNode>, edges: Vec<DependencyEdge>) -> Self {
        let mut out_edges: IndexMap<String, Vec<DependencyEdge>> = IndexMap::new();
        let mut node_map = IndexMap::with_capacity(nodes.len());
        let mut dropped_duplicates = Vec::new();
        for n in nodes {
            if node_map.contains_key(&n.id) {
                dropped_duplicates.push(n.id);
                continue;
            }
            out_edges.entry(n.id.clone()).or_default();
            node_map.insert(n.id.clone(), n);
        }
        for e in edges {
            out_edges.entry(e.source.clone()).or_default().push(e);
        }
        Self {
            nodes: node_map,
            out_edges,
            dropped_duplicates,
        }
    }

    pub fn to_document(&self) -> GraphDocument {
        let tools = self
            .nodes
            .values()
            .map(|n| ToolEntry {
                id: (n.id != n.name).then(|| n.id.clone()),
                name: n.name.clone(),
                description: n.description.clone(),
                kind: n.kind,
                parameters: n
                    .parameters
                    .iter()
                    .map(|p| ParameterEntry {
                        name: p.name.clone(),
                        description: p.description.clone(),
                        value_kind: p.value_kind.clone(),
                        required: p.required,
                    })
                    .collect(),
                dependencies: self
                    .edges(&n.id)
                    .iter()
                    .map(|e| DependencyEntry {
                        target: e.target.clone(),
                        relation: e.relation,
                        reason: e.reason.clone(),
                        parameter_name: e.parameter_name.clone(),
                    })
                    .collect(),
            })
            .collect();
        GraphDocument { tools }
    }

    pub fn to_json_pretty(&self) -> Result<String, GraphError> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &str) -> Option<&ToolNode> {
        self.nodes.get(id)
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> impl Iterator<Item = &ToolNode> + '_ {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.nodes.keys().map(String::as_str)
    }

    /// Outgoing edges of `id` in declaration order (empty for unknown ids).
    pub fn edges(&self, id: &str) -> &[DependencyEdge] {
        self.out_edges.get(id).unwrap_or(&NO_EDGES)
    }

    pub fn all_edges(&self) -> impl Iterator<Item = &DependencyEdge> + '_ {
        self.out_edges.values().flatten()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.values().map(Vec::len).sum()
    }

    /// Lazily enumerates tools reachable from `root` in depth-first pre-order.
    pub fn dfs(&self, root: &str) -> Result<DfsIter<'_>, GraphError> {
        if !self.contains(root) {
            return Err(GraphError::UnknownTool(root.to_string()));
        }
        Ok(DfsIter::new(self, root))
    }

    /// The first `d_limit` tools of the depth-first pre-order traversal from
    /// `root`, root excluded. Children are visited in edge declaration order
    /// and cycles are cut by a per-call visited set.
    pub fn dependencies_dfs(&self, root: &str, d_limit: usize) -> Result<Vec<String>, GraphError> {
        Ok(self.dfs(root)?.take(d_limit).map(str::to_string).collect())
    }

    /// Every tool reachable from `root`, root excluded, in DFS order.
    pub fn reachable(&self, root: &str) -> Result<Vec<String>, GraphError> {
        Ok(self.dfs(root)?.map(str::to_string).collect())
    }

    pub fn stats(&self) -> GraphStats {
        let total_tools = self.nodes.len();
        let core_count = self
            .nodes
            .values()
            .filter(|n| n.kind == ToolKind::Core)
            .count();
        let avg_dependencies = if total_tools == 0 {
            0.0
        } else {
            self.edge_count() as f64 / total_tools as f64
        };
        GraphStats {
            total_tools,
            core_count,
            regular_count: total_tools - core_count,
            avg_dependencies,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Ids with at least one incoming edge from another tool in `within`.
    pub(crate) fn targets_within(&self, within: &HashSet<&str>) -> HashSet<String> {
        within
            .iter()
            .flat_map(|id| self.edges(id))
            .filter(|e| e.source != e.target)
            .map(|e| e.target.clone())
            .collect()
    }
}

fn parse_document(bytes: &[u8]) -> Result<GraphDocument, GraphError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let doc: GraphDocument = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        GraphError::Parse {
            line: inner.line(),
            column: inner.column(),
            path,
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|inner| GraphError::Parse {
        line: inner.line(),
        column: inner.column(),
        path: ".".to_string(),
        message: inner.to_string(),
    })?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TOOLS: &str = r#"{"tools": [
        {"name": "A", "description": "core tool", "type": "core"},
        {"name": "B", "description": "regular tool", "type": "regular",
         "dependencies": [{"target": "A", "relation": "tool_directly_depends_on", "reason": "needs A"}]}
    ]}"#;

    #[test]
    fn loads_minimal_document() {
        let g = ToolKnowledgeGraph::from_json(TWO_TOOLS.as_bytes()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges("B")[0].target, "A");
        assert_eq!(g.node("A").unwrap().kind, ToolKind::Core);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn unknown_target_names_both_ends() {
        let doc = r#"{"tools": [{"name": "B", "type": "regular",
            "dependencies": [{"target": "X", "relation": "tool_directly_depends_on"}]}]}"#;
        let err = ToolKnowledgeGraph::from_json(doc.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, GraphError::UnknownTarget { .. }));
        assert!(msg.contains("unknown target X"), "{msg}");
        assert!(msg.contains('B'));
    }

    #[test]
    fn duplicate_id_rejected() {
        let doc = r#"{"tools": [{"name": "A", "type": "core"}, {"name": "A", "type": "regular"}]}"#;
        let err = ToolKnowledgeGraph::from_json(doc.as_bytes()).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateTool(ref id) if id == "A"));
    }

    #[test]
    fn parse_error_carries_line_and_field() {
        let doc = "{\"tools\": [\n  {\"name\": \"A\", \"type\": \"utility\"}\n]}";
        match ToolKnowledgeGraph::from_json(doc.as_bytes()).unwrap_err() {
            GraphError::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert!(path.contains("tools[0].type"), "{path}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_relation_is_a_parse_error() {
        let doc = r#"{"tools": [{"name": "A", "type": "core",
            "dependencies": [{"target": "A", "relation": "likes"}]}]}"#;
        assert!(matches!(
            ToolKnowledgeGraph::from_json(doc.as_bytes()),
            Err(GraphError::Parse { .. })
        ));
    }

    #[test]
    fn relation_parsing_is_lenient() {
        assert_eq!(
            "PARAMETER_DIRECTLY_DEPENDS_ON".parse::<Relation>().unwrap(),
            Relation::ParamDirect
        );
        assert_eq!(
            "tool indirectly depends on".parse::<Relation>().unwrap(),
            Relation::ToolIndirect
        );
        assert!("depends".parse::<Relation>().is_err());
        for r in Relation::ALL {
            assert_eq!(r.as_str().parse::<Relation>().unwrap(), r);
        }
    }

    #[test]
    fn stats_two_nodes_one_edge() {
        let g = ToolKnowledgeGraph::from_json(TWO_TOOLS.as_bytes()).unwrap();
        let s = g.stats();
        assert_eq!((s.total_tools, s.core_count, s.regular_count), (2, 1, 1));
        assert!((s.avg_dependencies - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stats_empty_graph() {
        let g = ToolKnowledgeGraph::default();
        let s = g.stats();
        assert_eq!((s.total_tools, s.core_count, s.regular_count), (0, 0, 0));
        assert_eq!(s.avg_dependencies, 0.0);
    }

    #[test]
    fn explicit_ids_survive_round_trip() {
        let doc = r#"{"tools": [
            {"id": "t1", "name": "Alpha", "type": "core"},
            {"id": "t2", "name": "Beta", "type": "regular",
             "dependencies": [{"target": "t1", "relation": "tool_indirectly_depends_on"}]}]}"#;
        let g = ToolKnowledgeGraph::from_json(doc.as_bytes()).unwrap();
        assert_eq!(g.node("t1").unwrap().name, "Alpha");
        let again = ToolKnowledgeGraph::from_json(g.to_json_pretty().unwrap().as_bytes()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn unknown_root_is_lookup_error() {
        let g = ToolKnowledgeGraph::from_json(TWO_TOOLS.as_bytes()).unwrap();
        assert!(matches!(
            g.dependencies_dfs("Z", 3),
            Err(GraphError::UnknownTool(_))
        ));
    }
}
