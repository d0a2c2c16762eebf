//! Graph cleaning: fuzzy name deduplication and schema filtering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::graph::{Ackg, NodeId, NodeType};

pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.95;

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)`; two empty strings are identical.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

const ROMAN_NUMERALS: [&str; 20] = [
    "I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII", "XIII", "XIV", "XV", "XVI", "XVII",
    "XVIII", "XIX", "XX",
];

fn trailing_numeral(name: &str) -> Option<&'static str> {
    let last = name.split_whitespace().last()?;
    ROMAN_NUMERALS.iter().copied().find(|n| n.eq_ignore_ascii_case(last))
}

/// True when both names end in Roman numerals (I..XX) that differ, e.g.
/// "Elizabeth I" and "Elizabeth II".
pub fn numeral_guard(a: &str, b: &str) -> bool {
    matches!((trailing_numeral(a), trailing_numeral(b)), (Some(x), Some(y)) if x != y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeEntry {
    pub survivor: NodeId,
    pub absorbed: NodeId,
    pub survivor_name: String,
    pub absorbed_name: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilteredNode {
    pub id: NodeId,
    pub name: String,
    pub type_label: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleaningReport {
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub merges: Vec<MergeEntry>,
    pub filtered: Vec<FilteredNode>,
}

impl CleaningReport {
    pub fn unchanged(graph: &Ackg) -> Self {
        CleaningReport {
            nodes_before: graph.node_count(),
            nodes_after: graph.node_count(),
            edges_before: graph.edge_count(),
            edges_after: graph.edge_count(),
            ..Default::default()
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes: {} -> {}", self.nodes_before, self.nodes_after);
        let _ = writeln!(s, "edges: {} -> {}", self.edges_before, self.edges_after);
        let _ = writeln!(s, "merged: {}", self.merges.len());
        for m in &self.merges {
            let _ = writeln!(
                s,
                "  {:?} <- {:?} ({:.4})",
                m.survivor_name, m.absorbed_name, m.similarity
            );
        }
        let _ = writeln!(s, "filtered: {}", self.filtered.len());
        for f in &self.filtered {
            let _ = writeln!(s, "  {:?} [{}]: {}", f.name, f.type_label, f.reason);
        }
        s
    }
}

/// Nodes are only compared within one (type, raw type) group.
type DedupGroup = (NodeType, Option<String>);

fn dedup_key(name: &str) -> &str {
    name.trim()
}

/// Merges same-typed nodes whose trimmed names have normalized Levenshtein
/// similarity above `threshold`, unless the numeral guard fires. Components
/// of the similarity relation collapse onto their lexicographically smallest
/// name; each recorded merge joins two directly similar names.
pub fn dedup_nodes(mut graph: Ackg, threshold: f64) -> (Ackg, CleaningReport) {
    let mut report = CleaningReport::unchanged(&graph);

    let mut groups: BTreeMap<DedupGroup, Vec<(String, NodeId)>> = BTreeMap::new();
    for node in graph.nodes() {
        groups
            .entry((node.node_type, node.raw_type.clone()))
            .or_default()
            .push((dedup_key(&node.name).to_owned(), node.id.clone()));
    }

    for (_, mut members) in groups {
        members.sort();
        let n = members.len();
        let lens: Vec<usize> = members.iter().map(|(name, _)| name.chars().count()).collect();
        let mut similar: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let longest = lens[i].max(lens[j]);
                // Similarity can't exceed 1 - |len_i - len_j| / longest.
                if longest > 0 && 1.0 - lens[i].abs_diff(lens[j]) as f64 / longest as f64 <= threshold {
                    continue;
                }
                let (a, b) = (&members[i].0, &members[j].0);
                let sim = normalized_levenshtein(a, b);
                if sim > threshold && !numeral_guard(a, b) {
                    similar[i].push((j, sim));
                    similar[j].push((i, sim));
                }
            }
        }

        let mut visited = vec![false; n];
        for root in 0..n {
            if visited[root] || similar[root].is_empty() {
                continue;
            }
            // BFS from the smallest name; merge leaves first.
            visited[root] = true;
            let mut order = Vec::new();
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let mut next: Vec<(usize, f64)> = similar[u].iter().copied().filter(|(v, _)| !visited[*v]).collect();
                next.sort_by_key(|(v, _)| *v);
                for (v, sim) in next {
                    visited[v] = true;
                    order.push((u, v, sim));
                    queue.push_back(v);
                }
            }
            for &(parent, child, sim) in order.iter().rev() {
                let survivor = &members[parent].1;
                let absorbed = &members[child].1;
                graph
                    .merge_nodes(survivor, absorbed)
                    .expect("both endpoints present until merged");
                report.merges.push(MergeEntry {
                    survivor: survivor.clone(),
                    absorbed: absorbed.clone(),
                    survivor_name: members[parent].0.clone(),
                    absorbed_name: members[child].0.clone(),
                    similarity: sim,
                });
            }
        }
    }

    report.nodes_after = graph.node_count();
    report.edges_after = graph.edge_count();
    (graph, report)
}

/// Removes nodes whose extracted type is outside the schema or not in
/// `allowed`, together with their edges.
pub fn filter_by_type(mut graph: Ackg, allowed: &BTreeSet<NodeType>) -> (Ackg, Vec<FilteredNode>) {
    let doomed: Vec<(NodeId, String)> = graph
        .nodes()
        .filter_map(|n| {
            if let Some(raw) = &n.raw_type {
                Some((n.id.clone(), format!("type {raw:?} is outside the schema")))
            } else if !allowed.contains(&n.node_type) {
                Some((
                    n.id.clone(),
                    format!("type {:?} is not allowed", n.node_type.canonical_name()),
                ))
            } else {
                None
            }
        })
        .collect();
    let mut removed = Vec::with_capacity(doomed.len());
    for (id, reason) in doomed {
        let node = graph.remove_node(&id).expect("listed from the graph");
        log::info!("filtered {:?}: {reason}", node.name);
        removed.push(FilteredNode {
            type_label: node.type_label().to_owned(),
            id,
            name: node.name,
            reason,
        });
    }
    (graph, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::KgNode;

    // Plain recursive edit distance.
    fn oracle(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = oracle(ra, rb) + usize::from(x != y);
                sub.min(oracle(ra, b) + 1).min(oracle(a, rb) + 1)
            }
        }
    }

    fn oracle_sim(a: &str, b: &str) -> f64 {
        let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let m = a.len().max(b.len());
        if m == 0 {
            1.0
        } else {
            1.0 - oracle(&a, &b) as f64 / m as f64
        }
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(normalized_levenshtein("abc", "abc"), 1.0);
        assert!((normalized_levenshtein("abc", "abd") - oracle_sim("abc", "abd")).abs() < 1e-12);
        assert!((normalized_levenshtein("abc", "abd") - 0.6667).abs() < 1e-4);
        let e = normalized_levenshtein("Elizabeth I", "Elizabeth II");
        assert!((e - oracle_sim("Elizabeth I", "Elizabeth II")).abs() < 1e-12);
        assert!((e - (1.0 - 1.0 / 12.0)).abs() < 1e-12);
        assert_eq!(normalized_levenshtein("", ""), 1.0);
        assert_eq!(normalized_levenshtein("", "ab"), 0.0);
    }

    #[test]
    fn exhaustive_small_alphabet_agrees_with_oracle() {
        fn all(len: usize) -> Vec<String> {
            if len == 0 {
                return vec![String::new()];
            }
            all(len - 1)
                .into_iter()
                .flat_map(|s| ['a', 'b', 'c'].map(|c| format!("{s}{c}")))
                .collect()
        }
        let pool: Vec<String> = (0..=4).flat_map(all).collect();
        for a in &pool {
            for b in &pool {
                let got = normalized_levenshtein(a, b);
                assert_eq!(got, oracle_sim(a, b), "{a:?} {b:?}");
                assert_eq!(got, normalized_levenshtein(b, a));
                assert_eq!(got == 1.0, a == b);
            }
        }
    }

    #[test]
    fn numerals() {
        assert!(numeral_guard("Elizabeth I", "Elizabeth II"));
        assert!(numeral_guard("LOUIS XIV", "Louis XV"));
        assert!(!numeral_guard("Louis XIV", "Louis XIV"));
        assert!(!numeral_guard("Elizabeth", "Elizabeth II"));
        assert!(!numeral_guard("Pope Pius", "Pope Paul"));
    }

    fn g(nodes: &[(&str, NodeType)]) -> Ackg {
        let mut g = Ackg::new();
        for (name, t) in nodes {
            let node = KgNode::new(*name, *t, format!("d {name}")).with_id(NodeId::new(format!("{name}#{t:?}")));
            g.upsert_node(node).unwrap();
        }
        g
    }

    #[test]
    fn trailing_space_duplicate_merges() {
        let (out, report) = dedup_nodes(
            g(&[("Claude Monet", NodeType::Artist), ("Claude Monet ", NodeType::Artist)]),
            0.95,
        );
        assert_eq!(out.node_count(), 1);
        assert_eq!(report.merges.len(), 1);
        assert_eq!(report.merges[0].similarity, 1.0);
    }

    #[test]
    fn elizabeths_stay_apart() {
        let (out, report) = dedup_nodes(
            g(&[("Elizabeth I", NodeType::Artist), ("Elizabeth II", NodeType::Artist)]),
            0.95,
        );
        assert_eq!(out.node_count(), 2);
        assert!(report.merges.is_empty());
        // The guard alone also blocks them at a permissive threshold.
        let (out, _) = dedup_nodes(
            g(&[("Elizabeth I", NodeType::Artist), ("Elizabeth II", NodeType::Artist)]),
            0.5,
        );
        assert_eq!(out.node_count(), 2);
    }

    #[test]
    fn different_types_never_merge() {
        let (out, _) = dedup_nodes(
            g(&[
                ("Baroque", NodeType::MovementSchool),
                ("Baroque", NodeType::StyleTechnique),
            ]),
            0.95,
        );
        assert_eq!(out.node_count(), 2);
    }

    #[test]
    fn survivor_is_smallest_name_and_chains_are_transitive() {
        // 20-char names: one edit gives similarity 0.95, which does not pass
        // a strict 0.95 threshold; use 0.94.
        let a = "Abcdefghijklmnopqrst";
        let b = "Abcdefghijklmnopqrsu";
        let c = "Abcdefghijklmnopqruu";
        assert!(normalized_levenshtein(a, c) <= 0.94);
        let (out, report) = dedup_nodes(
            g(&[(c, NodeType::Theme), (b, NodeType::Theme), (a, NodeType::Theme)]),
            0.94,
        );
        assert_eq!(out.node_count(), 1);
        assert_eq!(out.nodes().next().unwrap().name, a);
        assert_eq!(report.merges.len(), 2);
        for m in &report.merges {
            assert!(normalized_levenshtein(&m.survivor_name, &m.absorbed_name) > 0.94);
        }
        let (again, report2) = dedup_nodes(out.clone(), 0.94);
        assert_eq!(again, out);
        assert!(report2.merges.is_empty());
    }

    #[test]
    fn filter_removes_out_of_schema_and_disallowed() {
        let mut graph = Ackg::new();
        let p = graph
            .upsert_node(KgNode::from_raw_type("Mona Lisa", "Painting", ""))
            .unwrap();
        let a = graph
            .upsert_node(KgNode::new("Leonardo", NodeType::Artist, ""))
            .unwrap();
        let o = graph.upsert_node(KgNode::new("Florence", NodeType::Other, "")).unwrap();
        graph.add_edge(&a, &p, "painted").unwrap();
        graph.add_edge(&a, &o, "worked in").unwrap();

        let all: BTreeSet<NodeType> = NodeType::ALL.into_iter().collect();
        let (out, removed) = filter_by_type(graph.clone(), &all);
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].type_label, "Painting");
        assert_eq!(out.node_count(), 2);
        assert_eq!(out.edge_count(), 1);

        let (clean, removed) = filter_by_type(out.clone(), &all);
        assert!(removed.is_empty());
        assert_eq!(clean, out);

        let no_other: BTreeSet<NodeType> = NodeType::ALL.into_iter().filter(|t| *t != NodeType::Other).collect();
        let (out, removed) = filter_by_type(graph, &no_other);
        assert_eq!(removed.len(), 2);
        assert_eq!(out.edge_count(), 0);
    }
}
