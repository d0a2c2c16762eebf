use std::fmt::Write as _;

use serde::Serialize;

use super::{Ackg, NodeType};

/// One row of the per-type summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeStats {
    pub label: String,
    pub nodes: usize,
    /// Edges whose written source node has this type.
    pub edges: usize,
    /// Mean description length in whitespace-delimited words.
    pub avg_description_words: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub rows: Vec<TypeStats>,
    pub total: TypeStats,
}

impl GraphStats {
    pub(super) fn compute(graph: &Ackg) -> Self {
        let mut nodes = [0usize; 6];
        let mut edges = [0usize; 6];
        let mut words = [0usize; 6];
        let slot = |t: NodeType| NodeType::ALL.iter().position(|x| *x == t).unwrap();

        for node in graph.nodes() {
            let i = slot(node.node_type);
            nodes[i] += 1;
            words[i] += node.description.split_whitespace().count();
        }
        for edge in graph.edges() {
            let source = graph.node(&edge.source).expect("edges reference stored nodes");
            edges[slot(source.node_type)] += 1;
        }

        let avg = |w: usize, n: usize| if n == 0 { 0.0 } else { w as f64 / n as f64 };
        let rows = NodeType::ALL
            .iter()
            .enumerate()
            .map(|(i, t)| TypeStats {
                label: t.canonical_name().to_owned(),
                nodes: nodes[i],
                edges: edges[i],
                avg_description_words: avg(words[i], nodes[i]),
            })
            .collect();
        let total_nodes = graph.node_count();
        let total = TypeStats {
            label: "Total".to_owned(),
            nodes: total_nodes,
            edges: graph.edge_count(),
            avg_description_words: avg(words.iter().sum(), total_nodes),
        };
        GraphStats { rows, total }
    }

    pub fn row(&self, node_type: NodeType) -> &TypeStats {
        self.rows
            .iter()
            .find(|r| r.label == node_type.canonical_name())
            .expect("one row per node type")
    }

    /// Plain-text table with `Node Type / # Nodes / # Edges / Avg. Len` columns.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let rule = "-".repeat(60);
        let _ = writeln!(
            out,
            "{:<26}{:>12}{:>12}{:>10}",
            "Node Type", "# Nodes", "# Edges", "Avg. Len"
        );
        let _ = writeln!(out, "{rule}");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<26}{:>12}{:>12}{:>10.1}",
                r.label, r.nodes, r.edges, r.avg_description_words
            );
        }
        let _ = writeln!(out, "{rule}");
        let t = &self.total;
        let _ = writeln!(
            out,
            "{:<26}{:>12}{:>12}{:>10.1}",
            t.label, t.nodes, t.edges, t.avg_description_words
        );
        out
    }
}
