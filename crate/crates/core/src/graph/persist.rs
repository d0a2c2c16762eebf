//! Line-delimited JSON persistence: one node or edge record per line, all
//! node records before any edge record.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Ackg, ChunkRef, KgEdge, KgNode, NodeId, NodeType};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Node(NodeRecord),
    Edge(EdgeRecord),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: NodeId,
    name: String,
    #[serde(rename = "type")]
    node_type: NodeType,
    description: String,
    provenance: BTreeSet<ChunkRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw_type: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    source: NodeId,
    target: NodeId,
    description: String,
    provenance: BTreeSet<ChunkRef>,
}

pub fn write_graph<W: Write>(graph: &Ackg, mut out: W) -> Result<()> {
    let io = |e| Error::io("<graph output>", e);
    for node in graph.nodes() {
        let rec = Record::Node(NodeRecord {
            id: node.id.clone(),
            name: node.name.clone(),
            node_type: node.node_type,
            description: node.description.clone(),
            provenance: node.provenance.clone(),
            raw_type: node.raw_type.clone(),
        });
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(io)?;
    }
    for edge in graph.edges() {
        let rec = Record::Edge(EdgeRecord {
            source: edge.source.clone(),
            target: edge.target.clone(),
            description: edge.description.clone(),
            provenance: edge.provenance.clone(),
        });
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_graph<R: BufRead>(input: R) -> Result<Ackg> {
    let mut graph = Ackg::new();
    let mut seen_edge = false;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let integrity = |message: String| Error::Integrity { line: line_no, message };
        match record {
            Record::Node(rec) => {
                if seen_edge {
                    return Err(integrity("node record after edge records".into()));
                }
                if graph.contains(&rec.id) {
                    return Err(integrity(format!("duplicate node {}", rec.id)));
                }
                let node = KgNode {
                    id: rec.id,
                    name: rec.name,
                    node_type: rec.node_type,
                    raw_type: rec.raw_type,
                    description: rec.description,
                    provenance: rec.provenance,
                };
                graph.upsert_node(node).map_err(|e| integrity(e.to_string()))?;
            }
            Record::Edge(rec) => {
                seen_edge = true;
                if graph.edge(&rec.source, &rec.target).is_some() {
                    return Err(integrity(format!("duplicate edge {} -- {}", rec.source, rec.target)));
                }
                let edge = KgEdge {
                    source: rec.source,
                    target: rec.target,
                    description: rec.description,
                    provenance: rec.provenance,
                };
                graph.insert_edge(edge).map_err(|e| integrity(e.to_string()))?;
            }
        }
    }
    Ok(graph)
}

pub fn save_graph(graph: &Ackg, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_graph(graph, BufWriter::new(file))
}

pub fn load_graph(path: &Path) -> Result<Ackg> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_graph(BufReader::new(file))
}
