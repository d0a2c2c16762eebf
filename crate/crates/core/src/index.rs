//! Exhaustive cosine-similarity index over node embeddings.
//!
//! On disk: `dim: u32 LE`, `count: u32 LE`, then `count * dim` little-endian
//! `f32` values, with node ids in a JSON sidecar (`<path>.ids.json`).

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::gateway::Gateway;
use crate::graph::{Ackg, KgNode, NodeId};
use crate::scalar::{dot, Scalar};

pub const DEFAULT_NODE_TEXT_BUDGET: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    pub batch_size: usize,
    /// Character budget for the embedded node text.
    pub node_text_budget: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            batch_size: 64,
            node_text_budget: DEFAULT_NODE_TEXT_BUDGET,
        }
    }
}

/// `"NAME (TYPE): DESCRIPTION"`, cut to at most `budget` characters.
pub fn node_text(node: &KgNode, budget: usize) -> String {
    let full = format!("{} ({}): {}", node.name, node.type_label(), node.description);
    truncate_chars(&full, budget).to_owned()
}

pub(crate) fn truncate_chars(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Validation(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (mut uv, mut uu, mut vv) = (0f64, 0f64, 0f64);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Ok(0.0);
    }
    Ok((uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub id: NodeId,
    pub similarity: f64,
}

/// Descending similarity, ascending id on ties.
pub(crate) fn hit_order(a: &RetrievalHit, b: &RetrievalHit) -> Ordering {
    b.similarity
        .partial_cmp(&a.similarity)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.id.cmp(&b.id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex<T = f32> {
    dim: usize,
    ids: Vec<NodeId>,
    data: Vec<T>,
}

impl<T: Scalar> VectorIndex<T> {
    pub fn new(dim: usize) -> Self {
        VectorIndex {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn insert(&mut self, id: NodeId, vector: &[T]) -> Result<()> {
        if self.ids.is_empty() && self.dim == 0 {
            self.dim = vector.len();
        }
        if vector.len() != self.dim || self.dim == 0 {
            return Err(Error::Validation(format!(
                "vector for {id} has dim {}, index dim {}",
                vector.len(),
                self.dim
            )));
        }
        if self.ids.contains(&id) {
            return Err(Error::Conflict(format!("{id} already indexed")));
        }
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn vector(&self, id: &NodeId) -> Option<&[T]> {
        let pos = self.ids.iter().position(|x| x == id)?;
        Some(&self.data[pos * self.dim..(pos + 1) * self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &[T])> {
        self.ids.iter().zip(self.data.chunks_exact(self.dim.max(1)))
    }

    /// The `min(k, len)` most similar entries.
    pub fn top_k(&self, query: &[T], k: usize) -> Result<Vec<RetrievalHit>> {
        if k == 0 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if query.len() != self.dim {
            return Err(Error::Validation(format!(
                "query dim {} does not match index dim {}",
                query.len(),
                self.dim
            )));
        }
        let query_zero = dot(query, query) == 0.0;
        let mut hits: Vec<RetrievalHit> = self
            .iter()
            .map(|(id, v)| RetrievalHit {
                id: id.clone(),
                similarity: if query_zero {
                    0.0
                } else {
                    cosine(query, v).expect("dims checked")
                },
            })
            .collect();
        hits.sort_by(hit_order);
        hits.truncate(k);
        Ok(hits)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.data.len() * 4);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], ids: Vec<NodeId>) -> Result<Self> {
        let bad = |m: String| Error::Parse { line: 0, message: m };
        if bytes.len() < 8 {
            return Err(bad("index file shorter than its header".into()));
        }
        let dim = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        if count != ids.len() {
            return Err(bad(format!("header lists {count} vectors, sidecar {} ids", ids.len())));
        }
        let body = &bytes[8..];
        if body.len() != count * dim * 4 {
            return Err(bad(format!(
                "expected {} payload bytes, found {}",
                count * dim * 4,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|b| T::from_f32(f32::from_le_bytes(b.try_into().unwrap())).unwrap_or_else(T::nan))
            .collect();
        Ok(VectorIndex { dim, ids, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))?;
        let sidecar = ids_path(path);
        let json = serde_json::to_string(&self.ids)?;
        std::fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let sidecar = ids_path(path);
        let ids_text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let ids: Vec<NodeId> = serde_json::from_str(&ids_text)?;
        VectorIndex::from_bytes(&bytes, ids)
    }
}

pub fn ids_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids.json");
    PathBuf::from(s)
}

/// Embeds every node (in id order), `batch_size` texts per gateway call.
pub fn build_index(gateway: &Gateway, graph: &Ackg, config: &IndexConfig) -> Result<VectorIndex<f32>> {
    let nodes: Vec<&KgNode> = graph.nodes().collect();
    let mut index = VectorIndex::new(0);
    for (batch_no, batch) in nodes.chunks(config.batch_size.max(1)).enumerate() {
        let texts: Vec<String> = batch.iter().map(|n| node_text(n, config.node_text_budget)).collect();
        let vectors = gateway
            .embed(&texts)
            .map_err(|e| e.context(format!("embedding batch {batch_no} (starting at {})", batch[0].id)))
            .stage(Stage::Index)?;
        for (node, v) in batch.iter().zip(vectors) {
            index.insert(node.id.clone(), v.values()).stage(Stage::Index)?;
        }
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockScript;
    use crate::graph::NodeType;

    #[test]
    fn node_text_format() {
        let n = KgNode::new("Monet", NodeType::Artist, "French painter");
        assert_eq!(node_text(&n, 512), "Monet (Artist): French painter");
        let e = KgNode::new("Monet", NodeType::Artist, "");
        assert_eq!(node_text(&e, 512), "Monet (Artist): ");
        let long = KgNode::new("Monet", NodeType::Artist, "é".repeat(10_000));
        assert!(node_text(&long, 512).chars().count() <= 512);
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[0.3f64, 0.4], &[0.3, 0.4]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0f64, 0.0], &[1.0, 1.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cosine(&[0.0f32, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(cosine(&[1.0f32], &[1.0, 2.0]), Err(Error::Validation(_))));
    }

    fn index(rows: &[(&str, [f32; 2])]) -> VectorIndex<f32> {
        let mut idx = VectorIndex::new(2);
        for (id, v) in rows {
            idx.insert(NodeId::from(*id), v).unwrap();
        }
        idx
    }

    #[test]
    fn top_k_ordering_and_ties() {
        let idx = index(&[
            ("b", [1.0, 1.0]),
            ("a", [1.0, 1.0]),
            ("c", [0.0, 1.0]),
            ("d", [1.0, 0.0]),
        ]);
        let hits = idx.top_k(&[1.0, 0.0], 10).unwrap();
        let ids: Vec<_> = hits.iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, ["d", "a", "b", "c"]);
        assert!((hits[0].similarity - 1.0).abs() < 1e-12);
        assert_eq!(idx.top_k(&[1.0, 0.0], 2).unwrap().len(), 2);
        assert!(matches!(idx.top_k(&[1.0, 0.0], 0), Err(Error::Validation(_))));
        assert!(VectorIndex::<f32>::new(2).top_k(&[1.0, 0.0], 3).unwrap().is_empty());
    }

    #[test]
    fn index_rejects_wrong_dim_and_duplicates() {
        let mut idx = index(&[("a", [1.0, 0.0])]);
        assert!(idx.insert(NodeId::from("b"), &[1.0]).is_err());
        assert!(idx.insert(NodeId::from("a"), &[1.0, 0.0]).is_err());
    }

    fn toy_graph() -> Ackg {
        let mut g = Ackg::new();
        for (n, t) in [
            ("Monet", NodeType::Artist),
            ("Impressionism", NodeType::MovementSchool),
            ("Water", NodeType::Theme),
        ] {
            g.upsert_node(KgNode::new(n, t, format!("{n} description"))).unwrap();
        }
        g
    }

    #[test]
    fn build_with_mock() {
        let gw = Gateway::mock(MockScript::default());
        let cfg = IndexConfig {
            batch_size: 2,
            ..IndexConfig::default()
        };
        let idx = build_index(&gw, &toy_graph(), &cfg).unwrap();
        assert_eq!((idx.len(), idx.dim()), (3, 256));
        let again = build_index(&gw, &toy_graph(), &cfg).unwrap();
        assert_eq!(idx.to_bytes(), again.to_bytes());
        assert!(build_index(&gw, &Ackg::new(), &cfg).unwrap().is_empty());
    }

    #[test]
    fn persistence_is_bit_exact() {
        let gw = Gateway::mock(MockScript::default());
        let idx = build_index(&gw, &toy_graph(), &IndexConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        idx.save(&path).unwrap();
        assert!(ids_path(&path).is_file());
        let back = VectorIndex::<f32>::load(&path).unwrap();
        assert_eq!(back, idx);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], &256u32.to_le_bytes());
        assert_eq!(&bytes[4..8], &3u32.to_le_bytes());
        assert_eq!(bytes.len(), 8 + 3 * 256 * 4);
        // Widening to f64 preserves values exactly.
        let wide = VectorIndex::<f64>::load(&path).unwrap();
        assert_eq!(wide.to_bytes(), bytes);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let idx = index(&[("a", [1.0, 0.0])]);
        let bytes = idx.to_bytes();
        assert!(VectorIndex::<f32>::from_bytes(&bytes[..bytes.len() - 1], idx.ids().to_vec()).is_err());
        assert!(VectorIndex::<f32>::from_bytes(&bytes, vec![]).is_err());
    }
}
