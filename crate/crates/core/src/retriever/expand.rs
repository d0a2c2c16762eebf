use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::{edge_key, Ackg, NodeId};

/// Grows `seeds` to at most `k` nodes. Each step takes the boundary edge with
/// the highest edge degree (ties: smallest endpoint pair) and adds its
/// outside endpoint; the boundary is recomputed after every addition. Seeds
/// are never removed. Returns seeds followed by additions in order.
pub fn expand_by_edge_degree(graph: &Ackg, seeds: &[NodeId], k: usize) -> Result<Vec<NodeId>> {
    let mut members: BTreeSet<&NodeId> = BTreeSet::new();
    let mut order: Vec<NodeId> = Vec::with_capacity(k.max(seeds.len()));
    for s in seeds {
        if !graph.contains(s) {
            return Err(Error::NotFound(format!("seed {s}")));
        }
        if members.insert(s) {
            order.push(s.clone());
        }
    }

    let mut degree_cache: HashMap<(NodeId, NodeId), usize> = HashMap::new();
    while order.len() < k {
        let mut best: Option<(usize, (NodeId, NodeId), &NodeId)> = None;
        for u in &members {
            for v in graph.neighbors(u)? {
                if members.contains(v) {
                    continue;
                }
                let key = edge_key(u, v);
                let degree = match degree_cache.get(&key) {
                    Some(d) => *d,
                    None => {
                        let d = graph.edge_degree(u, v)?;
                        degree_cache.insert(key.clone(), d);
                        d
                    }
                };
                let better = match &best {
                    None => true,
                    Some((bd, bkey, _)) => degree > *bd || (degree == *bd && key < *bkey),
                };
                if better {
                    best = Some((degree, key, v));
                }
            }
        }
        let Some((_, _, next)) = best else {
            break;
        };
        members.insert(next);
        order.push(next.clone());
    }
    Ok(order)
}
