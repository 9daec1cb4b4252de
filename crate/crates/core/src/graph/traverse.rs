use std::collections::HashSet;

use super::ToolKnowledgeGraph;

/// Pre-order depth-first iterator over the tools reachable from a root.
///
/// Yields each reachable tool once, never the root. A node is marked visited
/// when it is popped, which reproduces the order of the recursive traversal
/// even when a node is reachable along several paths.
pub struct DfsIter<'g> {
    graph: &'g ToolKnowledgeGraph,
    stack: Vec<&'g str>,
    visited: HashSet<&'g str>,
}

impl<'g> DfsIter<'g> {
    pub(super) fn new(graph: &'g ToolKnowledgeGraph, root: &str) -> Self {
        let (root, _) = graph
            .nodes
            .get_key_value(root)
            .expect("root checked by caller");
        let mut it = Self {
            graph,
            stack: Vec::new(),
            visited: HashSet::new(),
        };
        it.visited.insert(root.as_str());
        it.push_children(root);
        it
    }

    fn push_children(&mut self, id: &str) {
        let graph = self.graph;
        for edge in graph.edges(id).iter().rev() {
            if !self.visited.contains(edge.target.as_str()) {
                self.stack.push(edge.target.as_str());
            }
        }
    }
}

impl<'g> Iterator for DfsIter<'g> {
    type Item = &'g str;

    fn next(&mut self) -> Option<&'g str> {
        while let Some(id) = self.stack.pop() {
            if self.visited.insert(id) {
                self.push_children(id);
                return Some(id);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::{DependencyEdge, Relation, ToolKind, ToolKnowledgeGraph, ToolNode};

    fn graph(ids: &[&str], edges: &[(&str, &str)]) -> ToolKnowledgeGraph {
        let nodes = ids
            .iter()
            .map(|id| ToolNode {
                id: id.to_string(),
                name: id.to_string(),
                description: String::new(),
                kind: ToolKind::Regular,
                parameters: vec![],
            })
            .collect();
        let edges = edges
            .iter()
            .map(|(s, t)| DependencyEdge {
                source: s.to_string(),
                target: t.to_string(),
                relation: Relation::ToolDirect,
                reason: String::new(),
                parameter_name: None,
            })
            .collect();
        ToolKnowledgeGraph::from_raw_parts(nodes, edges)
    }

    #[test]
    fn preorder_in_declaration_order() {
        let g = graph(&["A", "B", "C", "D"], &[("A", "B"), ("A", "C"), ("B", "D")]);
        assert_eq!(g.dependencies_dfs("A", 10).unwrap(), ["B", "D", "C"]);
        assert_eq!(g.dependencies_dfs("A", 2).unwrap(), ["B", "D"]);
        assert!(g.dependencies_dfs("A", 0).unwrap().is_empty());
    }

    #[test]
    fn cycle_back_to_root() {
        let g = graph(&["A", "B"], &[("A", "B"), ("B", "A")]);
        assert_eq!(g.dependencies_dfs("A", 10).unwrap(), ["B"]);
    }

    #[test]
    fn diamond_visits_shared_child_once() {
        // A -> B -> D, A -> C -> D, C -> E
        let g = graph(
            &["A", "B", "C", "D", "E"],
            &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D"), ("C", "E")],
        );
        assert_eq!(g.dependencies_dfs("A", 10).unwrap(), ["B", "D", "C", "E"]);
    }

    #[test]
    fn late_path_does_not_reorder() {
        // A -> C first, then A -> B -> C: C must appear where the first path put it.
        let g = graph(&["A", "B", "C"], &[("A", "C"), ("A", "B"), ("B", "C")]);
        assert_eq!(g.dependencies_dfs("A", 10).unwrap(), ["C", "B"]);
    }

    #[test]
    fn self_loop_ignored() {
        let g = graph(&["A", "B"], &[("A", "A"), ("A", "B")]);
        assert_eq!(g.dependencies_dfs("A", 10).unwrap(), ["B"]);
    }
}
