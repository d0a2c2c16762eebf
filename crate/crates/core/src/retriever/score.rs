//! Fine-grained scoring: multimodal rank score, degree centrality, their
//! softmax-normalized convex combination, and top-m pruning.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{ContextSubgraph, PaintingQuery, RetrievalTrace, SubgraphEdge, SubgraphNode};
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, Gateway};
use crate::graph::{Ackg, KgNode, NodeId};
use crate::index::truncate_chars;
use crate::prompts::{render, PromptSet};
use crate::scalar::{softmax, Scalar};

/// How a rank position becomes a raw multimodal score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankScoring {
    /// `K - r + 1` for rank `r` (1 = best) among `K` candidates.
    #[default]
    Linear,
    /// `1 / r`.
    Reciprocal,
}

impl RankScoring {
    pub fn score<T: Scalar>(self, rank: usize, count: usize) -> T {
        match self {
            RankScoring::Linear => <T as Scalar>::from_usize(count - rank + 1),
            RankScoring::Reciprocal => T::one() / <T as Scalar>::from_usize(rank),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOutcome<T> {
    /// Candidates from most to least relevant.
    pub order: Vec<NodeId>,
    /// Raw score per candidate, aligned with the input candidate slice.
    pub s_ms: Vec<T>,
    pub fallback: bool,
}

/// Candidate numbers (1-based, converted to 0-based) from lines that hold
/// only numbers and separators. Out-of-range and repeated numbers are
/// ignored. `None` when no such number is found.
pub fn parse_ranking(text: &str, count: usize) -> Option<Vec<usize>> {
    let mut seen = vec![false; count];
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty()
            || !line
                .chars()
                .all(|c| c.is_ascii_digit() || c.is_whitespace() || ",;.>-[]()#".contains(c))
        {
            continue;
        }
        for tok in line.split(|c: char| !c.is_ascii_digit()).filter(|t| !t.is_empty()) {
            if let Ok(n) = tok.parse::<usize>() {
                if (1..=count).contains(&n) && !seen[n - 1] {
                    seen[n - 1] = true;
                    out.push(n - 1);
                }
            }
        }
    }
    (!out.is_empty()).then_some(out)
}

pub fn ranking_request(
    prompts: &PromptSet,
    painting: &PaintingQuery,
    candidates: &[&KgNode],
    description_chars: usize,
) -> ChatRequest {
    let listing: Vec<String> = candidates
        .iter()
        .enumerate()
        .map(|(i, n)| {
            format!(
                "[{}] {} ({}): {}",
                i + 1,
                n.name,
                n.type_label(),
                truncate_chars(&n.description, description_chars)
            )
        })
        .collect();
    let attributes = painting.attribute_bullets();
    let prompt = render(
        &prompts.ranking,
        &[("attributes", &attributes), ("candidates", &listing.join("\n"))],
    );
    ChatRequest::new().user_with_images(prompt, painting.image.iter().cloned().collect())
}

/// Asks the model to rank `candidates` (presented in the given order) and
/// derives a score from each one's rank position. Candidates the model
/// leaves out follow the ranked ones in id order. If neither of two
/// responses contains a ranking, `fallback_order` is used instead.
#[allow(clippy::too_many_arguments)]
pub fn rank_multimodal<T: Scalar>(
    gateway: &Gateway,
    prompts: &PromptSet,
    painting: &PaintingQuery,
    candidates: &[&KgNode],
    fallback_order: &[NodeId],
    scoring: RankScoring,
    description_chars: usize,
) -> Result<RankOutcome<T>> {
    if candidates.is_empty() {
        return Err(Error::Validation("no candidates to rank".into()));
    }
    let request = ranking_request(prompts, painting, candidates, description_chars);
    let mut parsed = parse_ranking(&gateway.chat(&request)?.text, candidates.len());
    if parsed.is_none() {
        parsed = parse_ranking(&gateway.chat(&request)?.text, candidates.len());
    }

    let (order, fallback) = match parsed {
        Some(ranked) => {
            let mut order: Vec<NodeId> = ranked.iter().map(|&i| candidates[i].id.clone()).collect();
            let mut rest: Vec<NodeId> = candidates
                .iter()
                .map(|n| n.id.clone())
                .filter(|id| !order.contains(id))
                .collect();
            rest.sort();
            order.extend(rest);
            (order, false)
        }
        None => {
            log::warn!("no ranking in model response; using coarse similarity order");
            let mut order: Vec<NodeId> = fallback_order
                .iter()
                .filter(|id| candidates.iter().any(|n| &n.id == *id))
                .cloned()
                .collect();
            let mut rest: Vec<NodeId> = candidates
                .iter()
                .map(|n| n.id.clone())
                .filter(|id| !order.contains(id))
                .collect();
            rest.sort();
            order.extend(rest);
            (order, true)
        }
    };
    let count = candidates.len();
    let s_ms = candidates
        .iter()
        .map(|n| {
            let rank = order
                .iter()
                .position(|id| *id == n.id)
                .expect("every candidate is ordered")
                + 1;
            scoring.score(rank, count)
        })
        .collect();
    Ok(RankOutcome { order, s_ms, fallback })
}

/// Degree of each candidate in the full graph.
pub fn centrality_scores<T: Scalar>(graph: &Ackg, candidates: &[NodeId]) -> Result<Vec<T>> {
    candidates
        .iter()
        .map(|id| graph.degree(id).map(<T as Scalar>::from_usize))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedScores<T> {
    pub ms_norm: Vec<T>,
    pub gc_norm: Vec<T>,
    pub combined: Vec<T>,
}

/// `λ·softmax(s_ms) + (1-λ)·softmax(s_gc)`, each softmax taken over the
/// candidate set.
pub fn combine_scores<T: Scalar>(s_ms: &[T], s_gc: &[T], lambda: T) -> Result<CombinedScores<T>> {
    if s_ms.is_empty() || s_ms.len() != s_gc.len() {
        return Err(Error::Validation(format!(
            "score vectors must be non-empty and equal length ({} vs {})",
            s_ms.len(),
            s_gc.len()
        )));
    }
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::Validation("lambda must lie in [0, 1]".into()));
    }
    let ms_norm = softmax(s_ms);
    let gc_norm = softmax(s_gc);
    let combined = ms_norm
        .iter()
        .zip(&gc_norm)
        .map(|(&m, &g)| lambda * m + (T::one() - lambda) * g)
        .collect();
    Ok(CombinedScores {
        ms_norm,
        gc_norm,
        combined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredNode<T> {
    pub id: NodeId,
    pub s_ms: T,
    pub s_gc: T,
    pub s: T,
}

pub fn scored_nodes<T: Scalar>(ids: &[NodeId], s_ms: &[T], s_gc: &[T], lambda: T) -> Result<Vec<ScoredNode<T>>> {
    let combined = combine_scores(s_ms, s_gc, lambda)?;
    Ok(ids
        .iter()
        .enumerate()
        .map(|(i, id)| ScoredNode {
            id: id.clone(),
            s_ms: s_ms[i],
            s_gc: s_gc[i],
            s: combined.combined[i],
        })
        .collect())
}

/// Descending combined score, ascending id on ties.
pub fn score_order<T: Scalar>(a: &ScoredNode<T>, b: &ScoredNode<T>) -> Ordering {
    b.s.partial_cmp(&a.s)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.id.cmp(&b.id))
}

/// Keeps the `m` best-scoring nodes and the edges among them.
pub fn prune_to_subgraph<T: Scalar>(graph: &Ackg, scored: &[ScoredNode<T>], m: usize) -> Result<ContextSubgraph<T>> {
    let mut ranked: Vec<&ScoredNode<T>> = scored.iter().collect();
    ranked.sort_by(|a, b| score_order(a, b));
    ranked.truncate(m);

    let mut nodes = Vec::with_capacity(ranked.len());
    for sn in &ranked {
        let node = graph
            .node(&sn.id)
            .ok_or_else(|| Error::NotFound(format!("node {}", sn.id)))?;
        nodes.push(SubgraphNode {
            id: node.id.clone(),
            name: node.name.clone(),
            node_type: node.type_label().to_owned(),
            description: node.description.clone(),
            provenance: node.provenance.iter().cloned().collect(),
            s_ms: sn.s_ms,
            s_gc: sn.s_gc,
            s: sn.s,
        });
    }
    let edges = graph
        .induced_edges(ranked.iter().map(|sn| &sn.id))?
        .into_iter()
        .map(|e| SubgraphEdge {
            source: e.source.clone(),
            target: e.target.clone(),
            source_name: graph.node(&e.source).map(|n| n.name.clone()).unwrap_or_default(),
            target_name: graph.node(&e.target).map(|n| n.name.clone()).unwrap_or_default(),
            description: e.description.clone(),
            provenance: e.provenance.iter().cloned().collect(),
        })
        .collect();
    Ok(ContextSubgraph {
        nodes,
        edges,
        trace: RetrievalTrace::default(),
    })
}
