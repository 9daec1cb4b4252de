use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{Relation, ToolKnowledgeGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyToolId,
    DuplicateToolId { id: String },
    EmptyParameterName { tool: String },
    DuplicateParameter { tool: String, parameter: String },
    UnknownSource { source: String, target: String },
    UnknownTarget { source: String, target: String },
    MissingParameterName { source: String, target: String, relation: Relation },
    UnexpectedParameterName { source: String, target: String, relation: Relation },
    UnknownParameter { source: String, target: String, parameter: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyToolId => write!(f, "tool with empty id"),
            Violation::DuplicateToolId { id } => write!(f, "duplicate tool id `{id}`"),
            Violation::EmptyParameterName { tool } => {
                write!(f, "tool `{tool}` has a parameter with an empty name")
            }
            Violation::DuplicateParameter { tool, parameter } => {
                write!(f, "tool `{tool}` declares parameter `{parameter}` more than once")
            }
            Violation::UnknownSource { source, target } => {
                write!(f, "edge {source} -> {target}: unknown source {source}")
            }
            Violation::UnknownTarget { source, target } => {
                write!(f, "edge {source} -> {target}: unknown target {target}")
            }
            Violation::MissingParameterName {
                source,
                target,
                relation,
            } => write!(f, "edge {source} -> {target}: {relation} requires parameter_name"),
            Violation::UnexpectedParameterName {
                source,
                target,
                relation,
            } => write!(
                f,
                "edge {source} -> {target}: {relation} must not carry parameter_name"
            ),
            Violation::UnknownParameter {
                source,
                target,
                parameter,
            } => write!(
                f,
                "edge {source} -> {target}: `{parameter}` is not a parameter of {source}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

pub(super) fn validate(g: &ToolKnowledgeGraph) -> ValidationReport {
    let mut violations = Vec::new();

    for id in &g.dropped_duplicates {
        violations.push(Violation::DuplicateToolId { id: id.clone() });
    }
    for (key, node) in &g.nodes {
        if key.is_empty() {
            violations.push(Violation::EmptyToolId);
        }
        if *key != node.id {
            // from_raw_parts keys by id, so this only trips on manual corruption
            violations.push(Violation::DuplicateToolId { id: node.id.clone() });
        }
        let mut seen = HashSet::new();
        for p in &node.parameters {
            if p.name.is_empty() {
                violations.push(Violation::EmptyParameterName {
                    tool: node.id.clone(),
                });
            } else if !seen.insert(p.name.as_str()) {
                violations.push(Violation::DuplicateParameter {
                    tool: node.id.clone(),
                    parameter: p.name.clone(),
                });
            }
        }
    }

    for edge in g.all_edges() {
        let (source, target) = (&edge.source, &edge.target);
        let source_node = g.nodes.get(source);
        if source_node.is_none() {
            violations.push(Violation::UnknownSource {
                source: source.clone(),
                target: target.clone(),
            });
        }
        if !g.nodes.contains_key(target) {
            violations.push(Violation::UnknownTarget {
                source: source.clone(),
                target: target.clone(),
            });
        }
        match (&edge.parameter_name, edge.relation.is_parameter()) {
            (None, true) => violations.push(Violation::MissingParameterName {
                source: source.clone(),
                target: target.clone(),
                relation: edge.relation,
            }),
            (Some(_), false) => violations.push(Violation::UnexpectedParameterName {
                source: source.clone(),
                target: target.clone(),
                relation: edge.relation,
            }),
            (Some(param), true) => {
                if let Some(node) = source_node {
                    if !node.has_parameter(param) {
                        violations.push(Violation::UnknownParameter {
                            source: source.clone(),
                            target: target.clone(),
                            parameter: param.clone(),
                        });
                    }
                }
            }
            (None, false) => {}
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DependencyEdge, ToolKind, ToolNode, ToolParameter};

    fn node(id: &str, params: &[&str]) -> ToolNode {
        ToolNode {
            id: id.into(),
            name: id.into(),
            description: String::new(),
            kind: ToolKind::Regular,
            parameters: params
                .iter()
                .map(|p| ToolParameter {
                    name: p.to_string(),
                    description: String::new(),
                    value_kind: "string".into(),
                    required: true,
                })
                .collect(),
        }
    }

    fn edge(s: &str, t: &str, relation: Relation, param: Option<&str>) -> DependencyEdge {
        DependencyEdge {
            source: s.into(),
            target: t.into(),
            relation,
            reason: String::new(),
            parameter_name: param.map(str::to_string),
        }
    }

    #[test]
    fn valid_graph_is_clean() {
        let g = ToolKnowledgeGraph::from_raw_parts(
            vec![node("A", &[]), node("B", &["ticker"])],
            vec![edge("B", "A", Relation::ParamDirect, Some("ticker"))],
        );
        assert!(g.validate().is_empty());
    }

    #[test]
    fn param_relation_without_parameter_name() {
        let g = ToolKnowledgeGraph::from_raw_parts(
            vec![node("A", &[]), node("B", &["ticker"])],
            vec![edge("B", "A", Relation::ParamDirect, None)],
        );
        let report = g.validate();
        assert_eq!(report.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::MissingParameterName { .. }
        ));
    }

    #[test]
    fn parameter_name_not_declared_on_source() {
        // the parameter exists on the target, not on the source
        let g = ToolKnowledgeGraph::from_raw_parts(
            vec![node("A", &["ticker"]), node("B", &["symbol"])],
            vec![edge("B", "A", Relation::ParamIndirect, Some("ticker"))],
        );
        let report = g.validate();
        assert_eq!(
            report.violations,
            vec![Violation::UnknownParameter {
                source: "B".into(),
                target: "A".into(),
                parameter: "ticker".into()
            }]
        );
    }

    #[test]
    fn structural_problems_reported() {
        let g = ToolKnowledgeGraph::from_raw_parts(
            vec![node("", &[]), node("A", &["x", "x", ""]), node("A", &[])],
            vec![
                edge("A", "Q", Relation::ToolDirect, None),
                edge("Z", "A", Relation::ToolDirect, Some("x")),
            ],
        );
        let report = g.validate();
        let kinds: Vec<_> = report.violations.iter().map(|v| v.to_string()).collect();
        assert!(report.violations.contains(&Violation::EmptyToolId), "{kinds:?}");
        assert!(report
            .violations
            .contains(&Violation::DuplicateToolId { id: "A".into() }));
        assert!(report.violations.contains(&Violation::DuplicateParameter {
            tool: "A".into(),
            parameter: "x".into()
        }));
        assert!(report
            .violations
            .contains(&Violation::EmptyParameterName { tool: "A".into() }));
        assert!(report.violations.contains(&Violation::UnknownTarget {
            source: "A".into(),
            target: "Q".into()
        }));
        assert!(report.violations.contains(&Violation::UnknownSource {
            source: "Z".into(),
            target: "A".into()
        }));
        assert!(report.violations.contains(&Violation::UnexpectedParameterName {
            source: "Z".into(),
            target: "A".into(),
            relation: Relation::ToolDirect
        }));
        assert_eq!(report.len(), 7);
    }
}
