//! Benchmark instances, one JSON object per line:
//! `{"id": ..., "query": ..., "golden_tools": [...], "seed": ...}` (`seed` optional).

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize};

use crate::graph::ToolKnowledgeGraph;

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("instance `{id}`: golden_tools is empty")]
    EmptyGolden { id: String },
    #[error("instance `{id}`: unknown tool `{tool}`")]
    UnknownTool { id: String, tool: String },
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalInstance {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub query: String,
    pub golden_tools: Vec<String>,
    /// The tool the query is primarily about; inferred from the graph when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

impl EvalInstance {
    pub fn golden_set(&self) -> HashSet<String> {
        self.golden_tools.iter().cloned().collect()
    }
}

/// Parses instances; blank lines are skipped.
pub fn load_instances(reader: impl BufRead) -> Result<Vec<EvalInstance>, InstanceError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: EvalInstance = serde_json::from_str(&line).map_err(|e| InstanceError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_instances(mut w: impl Write, instances: &[EvalInstance]) -> std::io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Checks instances against `graph` and rewrites tool names to tool ids.
///
/// A golden entry may be either a tool id or a tool name. Duplicate golden
/// entries are collapsed. Every problem found is returned.
pub fn resolve_instances(
    instances: &mut [EvalInstance],
    graph: &ToolKnowledgeGraph,
) -> Vec<InstanceError> {
    let resolve = |name: &str| -> Option<String> {
        if graph.contains(name) {
            return Some(name.to_string());
        }
        graph.nodes().find(|t| t.name == name).map(|t| t.id.clone())
    };
    let mut problems = Vec::new();
    let mut ids = HashSet::new();
    for inst in instances.iter_mut() {
        if !ids.insert(inst.id.clone()) {
            problems.push(InstanceError::DuplicateId(inst.id.clone()));
        }
        if inst.golden_tools.is_empty() {
            problems.push(InstanceError::EmptyGolden {
                id: inst.id.clone(),
            });
        }
        let mut seen = HashSet::new();
        let mut resolved = Vec::with_capacity(inst.golden_tools.len());
        for tool in &inst.golden_tools {
            match resolve(tool) {
                Some(id) => {
                    if seen.insert(id.clone()) {
                        resolved.push(id);
                    }
                }
                None => problems.push(InstanceError::UnknownTool {
                    id: inst.id.clone(),
                    tool: tool.clone(),
                }),
            }
        }
        inst.golden_tools = resolved;
        if let Some(seed) = &inst.seed {
            match resolve(seed) {
                Some(id) => inst.seed = Some(id),
                None => problems.push(InstanceError::UnknownTool {
                    id: inst.id.clone(),
                    tool: seed.clone(),
                }),
            }
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ToolKind, ToolNode};

    fn graph() -> ToolKnowledgeGraph {
        let node = |id: &str, name: &str| ToolNode {
            id: id.into(),
            name: name.into(),
            description: String::new(),
            kind: ToolKind::Regular,
            parameters: vec![],
        };
        ToolKnowledgeGraph::from_raw_parts(vec![node("t1", "get_date"), node("t2", "t2")], vec![])
    }

    #[test]
    fn loads_well_formed_lines() {
        let text = r#"{"id": "a", "query": "q1", "golden_tools": ["t1"]}

{"id": 7, "query": "q2", "golden_tools": ["t1", "t2"], "seed": "t2"}
{"id": "c", "query": "q3", "golden_tools": ["get_date"]}
"#;
        let mut v = load_instances(text.as_bytes()).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[1].id, "7");
        assert!(resolve_instances(&mut v, &graph()).is_empty());
        assert_eq!(v[2].golden_tools, ["t1"]);
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = "{\"id\": \"a\", \"query\": \"q\", \"golden_tools\": []}\n{oops\n";
        match load_instances(text.as_bytes()) {
            Err(InstanceError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_names_problems() {
        let mut v = vec![
            EvalInstance {
                id: "a".into(),
                query: "q".into(),
                golden_tools: vec!["nope".into()],
                seed: None,
            },
            EvalInstance {
                id: "b".into(),
                query: "q".into(),
                golden_tools: vec![],
                seed: None,
            },
        ];
        let problems = resolve_instances(&mut v, &graph());
        assert_eq!(problems.len(), 2);
        assert!(problems[0].to_string().contains("nope"));
        assert!(matches!(problems[1], InstanceError::EmptyGolden { .. }));
    }

    #[test]
    fn write_then_load() {
        let v = vec![EvalInstance {
            id: "x".into(),
            query: "say \"hi\"".into(),
            golden_tools: vec!["t1".into()],
            seed: Some("t1".into()),
        }];
        let mut buf = Vec::new();
        write_instances(&mut buf, &v).unwrap();
        assert_eq!(load_instances(buf.as_slice()).unwrap(), v);
    }
}
