use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chunk::Chunk;
use crate::error::Result;
use crate::gateway::{ChatRequest, Gateway};
use crate::graph::{name_slug, Ackg, ChunkRef, KgEdge, KgNode, NodeId, NodeType};
use crate::prompts::{render, PromptSet};

const FIELD_SEP: &str = "<|>";
const RECORD_SEP: &str = "##";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RecordBody {
    Entity {
        name: String,
        raw_type: String,
        description: String,
    },
    Relationship {
        source: String,
        target: String,
        description: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    #[serde(flatten)]
    pub body: RecordBody,
    pub origin: Option<ChunkRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedRecords {
    pub records: Vec<ExtractionRecord>,
    pub warnings: Vec<String>,
}

/// Parses `("entity"<|>NAME<|>TYPE<|>DESCRIPTION)` and
/// `("relationship"<|>SOURCE<|>TARGET<|>DESCRIPTION)` records, one per line
/// (or `##`-separated). Lines that do not open with `(` are ignored; record
/// lines that are malformed are skipped with a warning.
pub fn parse_extraction_output(text: &str) -> ParsedRecords {
    let mut out = ParsedRecords::default();
    for (line_no, line) in text.lines().enumerate() {
        for segment in line.split(RECORD_SEP) {
            let segment = segment.trim().trim_end_matches("<|COMPLETE|>").trim();
            if !segment.starts_with('(') {
                continue;
            }
            match parse_record(segment) {
                Ok(body) => out.records.push(ExtractionRecord { body, origin: None }),
                Err(why) => out.warnings.push(format!("line {}: {why}: {segment}", line_no + 1)),
            }
        }
    }
    out
}

fn clean_field(s: &str) -> String {
    s.trim().trim_matches('"').trim().to_owned()
}

fn parse_record(segment: &str) -> std::result::Result<RecordBody, &'static str> {
    let inner = segment.strip_prefix('(').unwrap_or(segment);
    let inner = inner.strip_suffix(')').ok_or("unterminated record")?;
    let fields: Vec<String> = inner.split(FIELD_SEP).map(clean_field).collect();
    let kind = fields[0].to_ascii_lowercase();
    if kind != "entity" && kind != "relationship" {
        return Err("unknown record kind");
    }
    if fields.len() != 4 {
        return Err("wrong field count");
    }
    if fields[1].is_empty() || fields[2].is_empty() {
        return Err("empty name field");
    }
    let [_, a, b, description]: [String; 4] = fields.try_into().expect("length checked");
    Ok(if kind == "entity" {
        RecordBody::Entity {
            name: a,
            raw_type: b,
            description,
        }
    } else {
        RecordBody::Relationship {
            source: a,
            target: b,
            description,
        }
    })
}

pub fn entity_type_list() -> String {
    NodeType::ALL
        .iter()
        .map(|t| t.canonical_name())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn extraction_request(prompts: &PromptSet, chunk: &Chunk) -> ChatRequest {
    let types = entity_type_list();
    let prompt = render(
        &prompts.extraction,
        &[
            ("entity_types", &types),
            ("examples", prompts.extraction_examples.trim_end()),
            ("input_text", &chunk.text),
        ],
    );
    ChatRequest::new().user(prompt)
}

/// One chat call for `chunk`; records carry the chunk as provenance.
pub fn extract_candidates(gateway: &Gateway, chunk: &Chunk, prompts: &PromptSet) -> Result<ParsedRecords> {
    let response = gateway.chat(&extraction_request(prompts, chunk))?;
    let mut parsed = parse_extraction_output(&response.text);
    let origin = ChunkRef::new(&chunk.document, chunk.index);
    for r in &mut parsed.records {
        r.origin = Some(origin.clone());
    }
    if parsed.records.is_empty() {
        let warning = format!("{}#{}: no extraction records in response", chunk.document, chunk.index);
        log::warn!("{warning}");
        parsed.warnings.push(warning);
    }
    Ok(parsed)
}

/// Builds the raw graph. Entities become nodes first so relationships can
/// refer to entities extracted from any chunk; relationships whose endpoints
/// do not resolve are dropped with a warning.
pub fn aggregate_candidates(records: &[ExtractionRecord]) -> (Ackg, Vec<String>) {
    let mut ordered: Vec<&ExtractionRecord> = records.iter().collect();
    ordered.sort_by(|a, b| a.origin.cmp(&b.origin));

    let mut graph = Ackg::new();
    let mut warnings = Vec::new();
    let mut by_slug: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();

    for record in &ordered {
        if let RecordBody::Entity {
            name,
            raw_type,
            description,
        } = &record.body
        {
            let mut node = KgNode::from_raw_type(name.trim(), raw_type, description.trim());
            if let Some(origin) = &record.origin {
                node.provenance.insert(origin.clone());
            }
            match graph.upsert_node(node) {
                Ok(id) => {
                    let ids = by_slug.entry(name_slug(name)).or_default();
                    if !ids.contains(&id) {
                        ids.push(id);
                        ids.sort();
                    }
                }
                Err(e) => warnings.push(format!("entity {name:?} skipped: {e}")),
            }
        }
    }

    for record in &ordered {
        if let RecordBody::Relationship {
            source,
            target,
            description,
        } = &record.body
        {
            let resolve = |name: &str| by_slug.get(&name_slug(name)).and_then(|ids| ids.first()).cloned();
            let (Some(s), Some(t)) = (resolve(source), resolve(target)) else {
                warnings.push(format!(
                    "relationship {source:?} -> {target:?} dropped: unknown endpoint"
                ));
                continue;
            };
            let edge = KgEdge {
                source: s,
                target: t,
                description: description.trim().to_owned(),
                provenance: record.origin.iter().cloned().collect(),
            };
            if let Err(e) = graph.insert_edge(edge) {
                warnings.push(format!("relationship {source:?} -> {target:?} dropped: {e}"));
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    (graph, warnings)
}
