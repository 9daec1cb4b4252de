#![allow(dead_code)]

use proptest::prelude::*;
use toolgraph::graph::{DependencyEdge, Relation, ToolKind, ToolKnowledgeGraph, ToolNode, ToolParameter};

pub const WORDS: &[&str] = &[
    "stock", "price", "weather", "date", "time", "email", "send", "search", "ticker", "city",
    "convert", "currency", "wifi", "status", "contact", "phone", "map", "route", "news", "alarm",
];

pub fn node(id: &str, description: &str) -> ToolNode {
    ToolNode {
        id: id.into(),
        name: id.into(),
        description: description.into(),
        kind: ToolKind::Regular,
        parameters: vec![],
    }
}

pub fn edge(s: &str, t: &str) -> DependencyEdge {
    DependencyEdge {
        source: s.into(),
        target: t.into(),
        relation: Relation::ToolDirect,
        reason: String::new(),
        parameter_name: None,
    }
}

pub fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..6).prop_map(|w| w.join(" "))
}

/// Tools `t0..tn` with random descriptions and random (possibly cyclic) edges
/// between existing tools.
pub fn corpus(max_tools: usize) -> impl Strategy<Value = ToolKnowledgeGraph> {
    (1..=max_tools)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(text(), n),
                prop::collection::vec(prop::collection::vec(0..n, 0..4), n),
            )
        })
        .prop_map(|(texts, adj)| {
            let nodes = texts
                .iter()
                .enumerate()
                .map(|(i, t)| node(&format!("t{i}"), t))
                .collect();
            let mut edges = Vec::new();
            for (s, targets) in adj.iter().enumerate() {
                let mut seen = Vec::new();
                for &t in targets {
                    if !seen.contains(&t) {
                        seen.push(t);
                        edges.push(edge(&format!("t{s}"), &format!("t{t}")));
                    }
                }
            }
            ToolKnowledgeGraph::from_raw_parts(nodes, edges)
        })
}

pub fn param(name: &str) -> ToolParameter {
    ToolParameter {
        name: name.into(),
        description: String::new(),
        value_kind: "string".into(),
        required: false,
    }
}
