//! Context retrieval for a painting: concept detection, coarse similarity
//! search, edge-degree expansion, fine-grained scoring and pruning.

pub mod concepts;
pub mod expand;
pub mod score;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::gateway::{Gateway, ImageRef};
use crate::graph::{Ackg, ChunkRef, KgNode, NodeId};
use crate::index::{cosine, RetrievalHit, VectorIndex};
use crate::prompts::PromptSet;

pub use concepts::{concept_request, detect_concepts, parse_concept_list, ConceptList};
pub use expand::expand_by_edge_degree;
pub use score::{
    centrality_scores, combine_scores, parse_ranking, prune_to_subgraph, rank_multimodal, ranking_request, score_order,
    scored_nodes, CombinedScores, RankOutcome, RankScoring, ScoredNode,
};

/// Attribute keys in presentation order; other keys follow alphabetically.
pub const ATTRIBUTE_ORDER: [&str; 6] = ["title", "artist", "technique", "timeframe", "type", "school"];

/// A painting image plus its metadata attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PaintingQuery {
    pub image: Option<ImageRef>,
    pub attributes: BTreeMap<String, String>,
    /// Used only at generation time; retrieval ignores it.
    pub question: Option<String>,
}

impl PaintingQuery {
    /// Blank values are dropped; keys are lowercased.
    pub fn from_attributes<K, V, I>(attributes: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut q = PaintingQuery::default();
        for (k, v) in attributes {
            q.set(k.as_ref(), v.as_ref());
        }
        q
    }

    pub fn with_image(mut self, image: ImageRef) -> Self {
        self.image = Some(image);
        self
    }

    pub fn with_question(mut self, question: impl Into<String>) -> Self {
        let q = question.into();
        self.question = (!q.trim().is_empty()).then(|| q.trim().to_owned());
        self
    }

    pub fn set(&mut self, key: &str, value: &str) {
        let (key, value) = (key.trim().to_lowercase(), value.trim());
        if !key.is_empty() && !value.is_empty() {
            self.attributes.insert(key, value.to_owned());
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image.is_none() && self.attributes.is_empty() {
            return Err(Error::Validation(
                "painting query needs an image or at least one attribute".into(),
            ));
        }
        Ok(())
    }

    pub fn ordered_attributes(&self) -> Vec<(&str, &str)> {
        let mut out: Vec<(&str, &str)> = ATTRIBUTE_ORDER
            .iter()
            .filter_map(|k| self.attributes.get_key_value(*k))
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        out.extend(
            self.attributes
                .iter()
                .filter(|(k, _)| !ATTRIBUTE_ORDER.contains(&k.as_str()))
                .map(|(k, v)| (k.as_str(), v.as_str())),
        );
        out
    }

    /// `- key: value` lines, or `(none)`.
    pub fn attribute_bullets(&self) -> String {
        let lines: Vec<String> = self
            .ordered_attributes()
            .into_iter()
            .map(|(k, v)| format!("- {k}: {v}"))
            .collect();
        if lines.is_empty() {
            "(none)".to_owned()
        } else {
            lines.join("\n")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrieverConfig {
    /// Seeds taken from the similarity search.
    pub k_coarse: usize,
    /// Size of the expanded candidate set.
    pub k: usize,
    /// Nodes kept after scoring.
    pub m: usize,
    /// Weight of the multimodal score against centrality.
    pub lambda: f64,
    pub n_concepts: usize,
    pub rank_scoring: RankScoring,
    pub ranking_description_chars: usize,
}

impl Default for RetrieverConfig {
    fn default() -> Self {
        RetrieverConfig {
            k_coarse: 5,
            k: 10,
            m: 5,
            lambda: 0.5,
            n_concepts: 5,
            rank_scoring: RankScoring::Linear,
            ranking_description_chars: 256,
        }
    }
}

impl RetrieverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_coarse == 0 || self.k_coarse > self.k {
            return Err(Error::Validation(format!(
                "need 1 <= k_coarse <= k (k_coarse = {}, k = {})",
                self.k_coarse, self.k
            )));
        }
        if self.m == 0 || self.m > self.k {
            return Err(Error::Validation(format!(
                "need 1 <= m <= k (m = {}, k = {})",
                self.m, self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Validation(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }
}

/// Attribute lines followed by a `Concepts:` line.
pub fn build_query_text(painting: &PaintingQuery, concepts: &[String]) -> Result<String> {
    let mut lines: Vec<String> = painting
        .ordered_attributes()
        .into_iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect();
    let concepts: Vec<&str> = concepts.iter().map(|c| c.trim()).filter(|c| !c.is_empty()).collect();
    if !concepts.is_empty() {
        lines.push(format!("Concepts: {}", concepts.join("; ")));
    }
    if lines.is_empty() {
        return Err(Error::Validation(
            "query text would be empty: no attributes and no concepts".into(),
        ));
    }
    Ok(lines.join("\n"))
}

/// Embeds `query_text` and returns the `k_coarse` nearest nodes.
pub fn coarse_retrieve(
    gateway: &Gateway,
    index: &VectorIndex<f32>,
    query_text: &str,
    k_coarse: usize,
) -> Result<(Vec<f32>, Vec<RetrievalHit>)> {
    let query = gateway
        .embed(&[query_text.to_owned()])
        .stage(Stage::Embed)?
        .pop()
        .ok_or(Error::EmptyResponse)
        .stage(Stage::Embed)?
        .into_values();
    let hits = index.top_k(&query, k_coarse).stage(Stage::Coarse)?;
    Ok((query, hits))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphNode<T = f64> {
    pub id: NodeId,
    pub name: String,
    #[serde(rename = "type")]
    pub node_type: String,
    pub description: String,
    pub provenance: Vec<ChunkRef>,
    pub s_ms: T,
    pub s_gc: T,
    pub s: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub source_name: String,
    pub target_name: String,
    pub description: String,
    pub provenance: Vec<ChunkRef>,
}

/// Intermediate results kept for inspection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalTrace {
    pub concepts: Vec<String>,
    pub query_text: String,
    pub seeds: Vec<RetrievalHit>,
    pub expansion: Vec<NodeId>,
    pub ranking: Vec<NodeId>,
    pub ranking_fallback: bool,
}

/// The pruned context: nodes in descending score order and the edges among them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSubgraph<T = f64> {
    pub nodes: Vec<SubgraphNode<T>>,
    pub edges: Vec<SubgraphEdge>,
    #[serde(default)]
    pub trace: RetrievalTrace,
}

impl<T> Default for ContextSubgraph<T> {
    fn default() -> Self {
        ContextSubgraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            trace: RetrievalTrace::default(),
        }
    }
}

impl<T> ContextSubgraph<T> {
    pub fn node_ids(&self) -> BTreeSet<&NodeId> {
        self.nodes.iter().map(|n| &n.id).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Every node is in `graph`, and the edge list is exactly the edges of
    /// `graph` induced by the node set.
    pub fn check_against(&self, graph: &Ackg) -> Result<()> {
        let ids = self.node_ids();
        if ids.len() != self.nodes.len() {
            return Err(Error::Validation("subgraph lists a node twice".into()));
        }
        for id in &ids {
            if !graph.contains(id) {
                return Err(Error::NotFound(format!("subgraph node {id}")));
            }
        }
        let expected: BTreeSet<(NodeId, NodeId)> = graph
            .induced_edges(ids.iter().copied())?
            .iter()
            .map(|e| e.key())
            .collect();
        let actual: BTreeSet<(NodeId, NodeId)> = self
            .edges
            .iter()
            .map(|e| crate::graph::edge_key(&e.source, &e.target))
            .collect();
        if expected != actual || actual.len() != self.edges.len() {
            return Err(Error::Validation("subgraph edges are not the induced edge set".into()));
        }
        Ok(())
    }
}

/// Concepts → query text → coarse search → expansion → ranking and
/// centrality → pruned subgraph. Errors carry the stage that failed.
pub fn retrieve_context(
    gateway: &Gateway,
    graph: &Ackg,
    index: &VectorIndex<f32>,
    prompts: &PromptSet,
    painting: &PaintingQuery,
    config: &RetrieverConfig,
) -> Result<ContextSubgraph<f64>> {
    config.validate()?;
    painting.validate()?;
    let concepts = detect_concepts(gateway, prompts, painting, config.n_concepts).stage(Stage::Concepts)?;
    let query_text = build_query_text(painting, &concepts.concepts).stage(Stage::Embed)?;
    let (query, seeds) = coarse_retrieve(gateway, index, &query_text, config.k_coarse)?;
    let mut trace = RetrievalTrace {
        concepts: concepts.concepts,
        query_text,
        seeds,
        ..RetrievalTrace::default()
    };
    if trace.seeds.is_empty() {
        return Ok(ContextSubgraph {
            trace,
            ..ContextSubgraph::default()
        });
    }

    let seed_ids: Vec<NodeId> = trace.seeds.iter().map(|h| h.id.clone()).collect();
    trace.expansion = expand_by_edge_degree(graph, &seed_ids, config.k).stage(Stage::Expand)?;

    let mut candidate_ids = trace.expansion.clone();
    candidate_ids.sort();
    let candidates: Vec<&KgNode> = candidate_ids
        .iter()
        .map(|id| graph.node(id).ok_or_else(|| Error::NotFound(format!("node {id}"))))
        .collect::<Result<_>>()
        .stage(Stage::Rank)?;
    let fallback = similarity_order(index, &query, &candidate_ids);
    let ranked: RankOutcome<f64> = rank_multimodal(
        gateway,
        prompts,
        painting,
        &candidates,
        &fallback,
        config.rank_scoring,
        config.ranking_description_chars,
    )
    .stage(Stage::Rank)?;
    trace.ranking = ranked.order;
    trace.ranking_fallback = ranked.fallback;

    let s_gc = centrality_scores::<f64>(graph, &candidate_ids).stage(Stage::Rank)?;
    let scored = scored_nodes(&candidate_ids, &ranked.s_ms, &s_gc, config.lambda).stage(Stage::Prune)?;
    let mut subgraph = prune_to_subgraph(graph, &scored, config.m).stage(Stage::Prune)?;
    subgraph.trace = trace;
    Ok(subgraph)
}

/// Candidates by descending similarity to `query`, ties by id. Nodes with no
/// stored vector come last.
fn similarity_order(index: &VectorIndex<f32>, query: &[f32], ids: &[NodeId]) -> Vec<NodeId> {
    let mut scored: Vec<(f64, &NodeId)> = ids
        .iter()
        .map(|id| {
            let sim = index
                .vector(id)
                .and_then(|v| cosine(query, v).ok())
                .unwrap_or(f64::NEG_INFINITY);
            (sim, id)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    scored.into_iter().map(|(_, id)| id.clone()).collect()
}
