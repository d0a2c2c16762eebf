//! Typed art context knowledge graph.
//!
//! Nodes are keyed by a canonical [`NodeId`]; edges are stored once per
//! unordered node pair but keep the orientation they were first written with,
//! which is what text rendering uses. All maps are ordered so that iteration,
//! persistence and every derived result are deterministic.

mod persist;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use persist::{load_graph, read_graph, save_graph, write_graph};
pub use stats::{GraphStats, TypeStats};

/// Separator used when merging free-text descriptions.
pub const DESCRIPTION_SEPARATOR: &str = " | ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeType {
    Artist,
    Theme,
    CultureHistory,
    StyleTechnique,
    MovementSchool,
    Other,
}

impl NodeType {
    pub const ALL: [NodeType; 6] = [
        NodeType::Artist,
        NodeType::Theme,
        NodeType::CultureHistory,
        NodeType::StyleTechnique,
        NodeType::MovementSchool,
        NodeType::Other,
    ];

    pub fn canonical_name(self) -> &'static str {
        match self {
            NodeType::Artist => "Artist",
            NodeType::Theme => "Theme",
            NodeType::CultureHistory => "Culture & History",
            NodeType::StyleTechnique => "Art style & technique",
            NodeType::MovementSchool => "Art Movement & school",
            NodeType::Other => "Others",
        }
    }

    fn slug(self) -> &'static str {
        match self {
            NodeType::Artist => "artist",
            NodeType::Theme => "theme",
            NodeType::CultureHistory => "culture_history",
            NodeType::StyleTechnique => "style_technique",
            NodeType::MovementSchool => "movement_school",
            NodeType::Other => "others",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl FromStr for NodeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = collapse_whitespace(s.trim().trim_matches('"'));
        NodeType::ALL
            .into_iter()
            .find(|t| t.canonical_name().eq_ignore_ascii_case(&wanted))
            .ok_or_else(|| Error::Validation(format!("unknown node type {s:?}")))
    }
}

impl Serialize for NodeType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.canonical_name())
    }
}

impl<'de> Deserialize<'de> for NodeType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercase, whitespace-normalized form of a name, used for id derivation
/// and name resolution.
pub fn name_slug(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    /// `<name slug>::<type slug>`. Names differing only in case or
    /// whitespace map to the same id.
    pub fn canonical(name: &str, node_type: NodeType) -> Self {
        NodeId(format!("{}::{}", name_slug(name), node_type.slug()))
    }

    fn for_raw_type(name: &str, raw_type: &str) -> Self {
        NodeId(format!("{}::{}", name_slug(name), name_slug(raw_type)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// A (document id, chunk index) pair recording where a fact was extracted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChunkRef {
    pub document: String,
    pub chunk: usize,
}

impl ChunkRef {
    pub fn new(document: impl Into<String>, chunk: usize) -> Self {
        ChunkRef {
            document: document.into(),
            chunk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KgNode {
    pub id: NodeId,
    pub name: String,
    pub node_type: NodeType,
    /// Type string as extracted when it did not parse into a [`NodeType`].
    /// Such nodes are typed [`NodeType::Other`] until cleaning removes them.
    pub raw_type: Option<String>,
    pub description: String,
    pub provenance: BTreeSet<ChunkRef>,
}

impl KgNode {
    pub fn new(name: impl Into<String>, node_type: NodeType, description: impl Into<String>) -> Self {
        let name = name.into();
        KgNode {
            id: NodeId::canonical(&name, node_type),
            name,
            node_type,
            raw_type: None,
            description: description.into(),
            provenance: BTreeSet::new(),
        }
    }

    /// Builds a node from an extracted type string, keeping the raw string
    /// when it is outside the schema.
    pub fn from_raw_type(name: impl Into<String>, raw_type: &str, description: impl Into<String>) -> Self {
        let name = name.into();
        match raw_type.parse::<NodeType>() {
            Ok(node_type) => KgNode::new(name, node_type, description),
            Err(_) => KgNode {
                id: NodeId::for_raw_type(&name, raw_type),
                name,
                node_type: NodeType::Other,
                raw_type: Some(raw_type.trim().to_owned()),
                description: description.into(),
                provenance: BTreeSet::new(),
            },
        }
    }

    pub fn with_id(mut self, id: impl Into<NodeId>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_provenance(mut self, chunk: ChunkRef) -> Self {
        self.provenance.insert(chunk);
        self
    }

    pub fn has_schema_type(&self) -> bool {
        self.raw_type.is_none()
    }

    pub fn type_label(&self) -> &str {
        self.raw_type.as_deref().unwrap_or(self.node_type.canonical_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KgEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub description: String,
    pub provenance: BTreeSet<ChunkRef>,
}

impl KgEdge {
    /// The unordered endpoint pair, smaller id first.
    pub fn key(&self) -> (NodeId, NodeId) {
        edge_key(&self.source, &self.target)
    }

    pub fn touches(&self, id: &NodeId) -> bool {
        &self.source == id || &self.target == id
    }

    pub fn other(&self, id: &NodeId) -> &NodeId {
        if &self.source == id {
            &self.target
        } else {
            &self.source
        }
    }
}

pub fn edge_key(a: &NodeId, b: &NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Appends the `" | "`-separated pieces of `extra` that `base` does not
/// already contain.
pub fn merge_description(base: &mut String, extra: &str) {
    let mut pieces: Vec<String> = split_description(base);
    for piece in split_description(extra) {
        if !pieces.contains(&piece) {
            pieces.push(piece);
        }
    }
    *base = pieces.join(DESCRIPTION_SEPARATOR);
}

fn split_description(s: &str) -> Vec<String> {
    s.split(DESCRIPTION_SEPARATOR.trim())
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::to_owned)
        .collect()
}

/// The art context knowledge graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ackg {
    nodes: BTreeMap<NodeId, KgNode>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    edges: BTreeMap<(NodeId, NodeId), KgEdge>,
}

impl Ackg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &NodeId) -> Option<&KgNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KgNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    /// Edges in ascending endpoint-pair order.
    pub fn edges(&self) -> impl Iterator<Item = &KgEdge> {
        self.edges.values()
    }

    pub fn edge(&self, a: &NodeId, b: &NodeId) -> Option<&KgEdge> {
        self.edges.get(&edge_key(a, b))
    }

    pub fn neighbors(&self, id: &NodeId) -> Result<&BTreeSet<NodeId>> {
        self.adjacency
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("node {id}")))
    }

    pub fn upsert_node(&mut self, node: KgNode) -> Result<NodeId> {
        if node.name.trim().is_empty() {
            return Err(Error::Validation("node name is empty".into()));
        }
        if node.id.as_str().is_empty() {
            return Err(Error::Validation("node id is empty".into()));
        }
        let id = node.id.clone();
        match self.nodes.get_mut(&id) {
            Some(existing) => {
                if existing.node_type != node.node_type || existing.raw_type != node.raw_type {
                    return Err(Error::Conflict(format!(
                        "node {id} already has type {:?}, got {:?}",
                        existing.type_label(),
                        node.type_label()
                    )));
                }
                merge_description(&mut existing.description, &node.description);
                existing.provenance.extend(node.provenance);
            }
            None => {
                self.adjacency.entry(id.clone()).or_default();
                self.nodes.insert(id.clone(), node);
            }
        }
        Ok(id)
    }

    pub fn add_edge(&mut self, source: &NodeId, target: &NodeId, description: &str) -> Result<()> {
        self.insert_edge(KgEdge {
            source: source.clone(),
            target: target.clone(),
            description: description.trim().to_owned(),
            provenance: BTreeSet::new(),
        })
    }

    /// Adds `edge`, or merges its description and provenance into the edge
    /// already stored for the same unordered pair.
    pub fn insert_edge(&mut self, edge: KgEdge) -> Result<()> {
        if edge.source == edge.target {
            return Err(Error::Validation(format!("self-loop on {}", edge.source)));
        }
        for end in [&edge.source, &edge.target] {
            if !self.nodes.contains_key(end) {
                return Err(Error::DanglingEdge(format!(
                    "{} -> {}: unknown node {end}",
                    edge.source, edge.target
                )));
            }
        }
        let key = edge.key();
        match self.edges.get_mut(&key) {
            Some(existing) => {
                merge_description(&mut existing.description, &edge.description);
                existing.provenance.extend(edge.provenance);
            }
            None => {
                self.link(&edge.source, &edge.target);
                self.edges.insert(key, edge);
            }
        }
        Ok(())
    }

    fn link(&mut self, a: &NodeId, b: &NodeId) {
        self.adjacency.entry(a.clone()).or_default().insert(b.clone());
        self.adjacency.entry(b.clone()).or_default().insert(a.clone());
    }

    fn unlink(&mut self, a: &NodeId, b: &NodeId) {
        if let Some(set) = self.adjacency.get_mut(a) {
            set.remove(b);
        }
        if let Some(set) = self.adjacency.get_mut(b) {
            set.remove(a);
        }
    }

    pub fn degree(&self, id: &NodeId) -> Result<usize> {
        self.neighbors(id).map(BTreeSet::len)
    }

    /// `|N(u) ∪ N(v)| - 2` for the edge `{u, v}`.
    pub fn edge_degree(&self, u: &NodeId, v: &NodeId) -> Result<usize> {
        if self.edge(u, v).is_none() {
            return Err(Error::NotFound(format!("edge {u} -- {v}")));
        }
        let nu = self.neighbors(u)?;
        let nv = self.neighbors(v)?;
        let union = nu.len() + nv.iter().filter(|x| !nu.contains(*x)).count();
        // u ∈ N(v) and v ∈ N(u), so the union always has at least two members.
        Ok(union - 2)
    }

    /// Edges with both endpoints in `subset`, in ascending endpoint-pair order.
    pub fn induced_edges<'a, I>(&self, subset: I) -> Result<Vec<&KgEdge>>
    where
        I: IntoIterator<Item = &'a NodeId>,
    {
        let mut members = BTreeSet::new();
        for id in subset {
            if !self.contains(id) {
                return Err(Error::NotFound(format!("node {id}")));
            }
            members.insert(id);
        }
        let mut out: Vec<&KgEdge> = Vec::new();
        for id in &members {
            for other in &self.adjacency[*id] {
                if *id < other && members.contains(other) {
                    out.push(&self.edges[&edge_key(id, other)]);
                }
            }
        }
        out.sort_by_key(|e| e.key());
        Ok(out)
    }

    /// Folds `absorbed` into `survivor`: edges are re-pointed, duplicate
    /// pairs merged, and edges between the two dropped.
    pub fn merge_nodes(&mut self, survivor: &NodeId, absorbed: &NodeId) -> Result<()> {
        if survivor == absorbed {
            return Err(Error::Validation(format!("cannot merge {survivor} into itself")));
        }
        for id in [survivor, absorbed] {
            if !self.contains(id) {
                return Err(Error::NotFound(format!("node {id}")));
            }
        }
        let gone = self.nodes.remove(absorbed).expect("checked above");
        let neighbors = self.adjacency.remove(absorbed).unwrap_or_default();
        {
            let keep = self.nodes.get_mut(survivor).expect("checked above");
            merge_description(&mut keep.description, &gone.description);
            keep.provenance.extend(gone.provenance);
        }
        for neighbor in neighbors {
            let mut edge = self
                .edges
                .remove(&edge_key(absorbed, &neighbor))
                .expect("adjacency and edge map agree");
            if let Some(set) = self.adjacency.get_mut(&neighbor) {
                set.remove(absorbed);
            }
            if &neighbor == survivor {
                continue;
            }
            if &edge.source == absorbed {
                edge.source = survivor.clone();
            } else {
                edge.target = survivor.clone();
            }
            self.insert_edge(edge)?;
        }
        Ok(())
    }

    /// Removes a node and every edge touching it.
    pub fn remove_node(&mut self, id: &NodeId) -> Result<KgNode> {
        let node = self
            .nodes
            .remove(id)
            .ok_or_else(|| Error::NotFound(format!("node {id}")))?;
        for neighbor in self.adjacency.remove(id).unwrap_or_default() {
            self.edges.remove(&edge_key(id, &neighbor));
            self.unlink(&neighbor, id);
        }
        Ok(node)
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats::compute(self)
    }

    /// Checks adjacency symmetry and edge/adjacency agreement.
    pub fn check_consistency(&self) -> Result<()> {
        let broken = |msg: String| Err(Error::Integrity { line: 0, message: msg });
        if self.adjacency.len() != self.nodes.len() {
            return broken("adjacency and node map disagree".into());
        }
        let mut half_edges = 0usize;
        for (id, set) in &self.adjacency {
            if !self.nodes.contains_key(id) {
                return broken(format!("adjacency for unknown node {id}"));
            }
            for other in set {
                if other == id {
                    return broken(format!("self-loop on {id}"));
                }
                if !self.adjacency.get(other).is_some_and(|s| s.contains(id)) {
                    return broken(format!("asymmetric adjacency {id} -> {other}"));
                }
                if !self.edges.contains_key(&edge_key(id, other)) {
                    return broken(format!("adjacency without edge {id} -- {other}"));
                }
                half_edges += 1;
            }
        }
        if half_edges != 2 * self.edges.len() {
            return broken("edge map has entries missing from adjacency".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(name: &str) -> KgNode {
        KgNode::new(name, NodeType::Theme, format!("about {name}"))
    }

    fn graph(names: &[&str], edges: &[(&str, &str)]) -> (Ackg, BTreeMap<String, NodeId>) {
        let mut g = Ackg::new();
        let mut ids = BTreeMap::new();
        for n in names {
            ids.insert(n.to_string(), g.upsert_node(node(n)).unwrap());
        }
        for (a, b) in edges {
            g.add_edge(&ids[*a], &ids[*b], &format!("{a}-{b}")).unwrap();
        }
        (g, ids)
    }

    #[test]
    fn node_type_parsing() {
        assert_eq!("artist".parse::<NodeType>().unwrap(), NodeType::Artist);
        assert_eq!(
            "CULTURE & HISTORY".parse::<NodeType>().unwrap(),
            NodeType::CultureHistory
        );
        assert_eq!(
            "Art  style & Technique".parse::<NodeType>().unwrap(),
            NodeType::StyleTechnique
        );
        assert_eq!(
            "art movement & school".parse::<NodeType>().unwrap(),
            NodeType::MovementSchool
        );
        assert_eq!("Others".parse::<NodeType>().unwrap(), NodeType::Other);
        assert!("Painting".parse::<NodeType>().is_err());
        assert!("".parse::<NodeType>().is_err());
    }

    #[test]
    fn canonical_ids_ignore_case_and_spacing() {
        let a = NodeId::canonical("Claude  Monet", NodeType::Artist);
        let b = NodeId::canonical("claude monet ", NodeType::Artist);
        assert_eq!(a, b);
        assert_eq!(a.as_str(), "claude_monet::artist");
        assert_ne!(a, NodeId::canonical("Claude Monet", NodeType::Theme));
    }

    #[test]
    fn upsert_counts_and_idempotence() {
        let mut g = Ackg::new();
        g.upsert_node(node("Harvest")).unwrap();
        assert_eq!(g.node_count(), 1);
        let before = g.clone();
        g.upsert_node(node("Harvest")).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn upsert_merges_description_and_provenance() {
        let mut g = Ackg::new();
        let id = g
            .upsert_node(
                KgNode::new("Fresco", NodeType::StyleTechnique, "wall painting")
                    .with_provenance(ChunkRef::new("d1", 0)),
            )
            .unwrap();
        g.upsert_node(
            KgNode::new("fresco", NodeType::StyleTechnique, "on wet plaster").with_provenance(ChunkRef::new("d2", 3)),
        )
        .unwrap();
        let n = g.node(&id).unwrap();
        assert_eq!(n.name, "Fresco");
        assert_eq!(n.description, "wall painting | on wet plaster");
        assert_eq!(n.provenance.len(), 2);
    }

    #[test]
    fn upsert_rejects_empty_name_and_type_conflict() {
        let mut g = Ackg::new();
        assert!(matches!(g.upsert_node(node("   ")), Err(Error::Validation(_))));
        g.upsert_node(node("Venice")).unwrap();
        let clash =
            KgNode::new("Venice", NodeType::CultureHistory, "").with_id(NodeId::canonical("Venice", NodeType::Theme));
        assert!(matches!(g.upsert_node(clash), Err(Error::Conflict(_))));
    }

    #[test]
    fn add_edge_rules() {
        let (mut g, ids) = graph(&["u", "v"], &[("u", "v")]);
        assert_eq!(g.degree(&ids["u"]).unwrap(), 1);
        assert_eq!(g.degree(&ids["v"]).unwrap(), 1);
        g.add_edge(&ids["v"], &ids["u"], "reverse").unwrap();
        assert_eq!(g.edge_count(), 1);
        let e = g.edge(&ids["u"], &ids["v"]).unwrap();
        assert_eq!(e.description, "u-v | reverse");
        assert_eq!(e.source, ids["u"]);
        assert!(matches!(
            g.add_edge(&ids["u"], &ids["u"], "x"),
            Err(Error::Validation(_))
        ));
        let ghost = NodeId::new("ghost");
        assert!(matches!(
            g.add_edge(&ids["u"], &ghost, "x"),
            Err(Error::DanglingEdge(_))
        ));
    }

    #[test]
    fn degrees() {
        let (g, ids) = graph(
            &["c", "a", "b", "d", "e", "z"],
            &[("c", "a"), ("c", "b"), ("c", "d"), ("c", "e")],
        );
        assert_eq!(g.degree(&ids["z"]).unwrap(), 0);
        assert_eq!(g.degree(&ids["c"]).unwrap(), 4);
        let (p, pid) = graph(&["x", "y", "w"], &[("x", "y"), ("y", "w")]);
        assert_eq!(p.degree(&pid["y"]).unwrap(), 2);
        assert!(matches!(g.degree(&NodeId::new("nope")), Err(Error::NotFound(_))));
    }

    #[test]
    fn edge_degree_fixed_cases() {
        let (g, ids) = graph(&["u", "v"], &[("u", "v")]);
        assert_eq!(g.edge_degree(&ids["u"], &ids["v"]).unwrap(), 0);

        let (t, tid) = graph(&["u", "v", "w"], &[("u", "v"), ("v", "w"), ("u", "w")]);
        for (a, b) in [("u", "v"), ("v", "w"), ("u", "w")] {
            assert_eq!(t.edge_degree(&tid[a], &tid[b]).unwrap(), 1);
        }

        let (s, sid) = graph(
            &["c", "l1", "l2", "l3", "l4"],
            &[("c", "l1"), ("c", "l2"), ("c", "l3"), ("c", "l4")],
        );
        assert_eq!(s.edge_degree(&sid["c"], &sid["l1"]).unwrap(), 3);
        assert!(matches!(s.edge_degree(&sid["l1"], &sid["l2"]), Err(Error::NotFound(_))));
    }

    #[test]
    fn induced_edges_cases() {
        let (g, ids) = graph(&["u", "v", "w"], &[("u", "v"), ("v", "w"), ("u", "w")]);
        assert!(g.induced_edges(std::iter::empty()).unwrap().is_empty());
        let sub = g.induced_edges([&ids["u"], &ids["v"]]).unwrap();
        assert_eq!(sub.len(), 1);
        assert_eq!(sub[0].key(), edge_key(&ids["u"], &ids["v"]));
        let ghost = NodeId::new("ghost");
        assert!(matches!(g.induced_edges([&ghost]), Err(Error::NotFound(_))));
    }

    #[test]
    fn merge_drops_self_loop() {
        let (mut g, ids) = graph(&["a", "b"], &[("a", "b")]);
        g.merge_nodes(&ids["a"], &ids["b"]).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node(&ids["a"]).unwrap().description, "about a | about b");
        g.check_consistency().unwrap();
    }

    #[test]
    fn merge_collapses_parallel_edges() {
        let (mut g, ids) = graph(&["a", "b", "c"], &[("c", "a"), ("c", "b")]);
        g.merge_nodes(&ids["a"], &ids["b"]).unwrap();
        assert_eq!(g.edge_count(), 1);
        let e = g.edge(&ids["c"], &ids["a"]).unwrap();
        assert_eq!(e.description, "c-a | c-b");
        assert_eq!((&e.source, &e.target), (&ids["c"], &ids["a"]));
        g.check_consistency().unwrap();
    }

    #[test]
    fn merge_path_end_into_start() {
        let (mut g, ids) = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        g.merge_nodes(&ids["a"], &ids["c"]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        let e = g.edge(&ids["a"], &ids["b"]).unwrap();
        assert_eq!(e.description, "a-b | b-c");
        // b -> c was re-pointed to b -> a, orientation kept.
        assert_eq!(g.degree(&ids["b"]).unwrap(), 1);
        assert!(matches!(g.merge_nodes(&ids["a"], &ids["a"]), Err(Error::Validation(_))));
    }

    #[test]
    fn remove_node_drops_incident_edges() {
        let (mut g, ids) = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")]);
        g.remove_node(&ids["b"]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(&ids["a"]).unwrap(), 1);
        g.check_consistency().unwrap();
    }

    #[test]
    fn raw_type_nodes() {
        let n = KgNode::from_raw_type("Mona Lisa", "Painting", "portrait");
        assert_eq!(n.node_type, NodeType::Other);
        assert_eq!(n.raw_type.as_deref(), Some("Painting"));
        assert_eq!(n.id.as_str(), "mona_lisa::painting");
        assert!(!n.has_schema_type());
        let ok = KgNode::from_raw_type("Impressionism", "art movement & school", "");
        assert!(ok.has_schema_type());
        assert_eq!(ok.node_type, NodeType::MovementSchool);
    }
}
