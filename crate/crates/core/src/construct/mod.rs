//! Knowledge-graph construction: chunk the corpus, extract candidate nodes
//! and edges with the language model, aggregate, then clean.

pub mod chunk;
pub mod clean;
pub mod extract;

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::gateway::Gateway;
use crate::graph::{save_graph, Ackg, NodeType};
use crate::prompts::PromptSet;

pub use chunk::{chunk_document, chunk_document_with, Chunk, ChunkConfig, Tokenizer, WhitespaceTokenizer};
pub use clean::{
    dedup_nodes, filter_by_type, levenshtein, normalized_levenshtein, numeral_guard, CleaningReport, FilteredNode,
    MergeEntry, DEFAULT_DEDUP_THRESHOLD,
};
pub use extract::{
    aggregate_candidates, extract_candidates, parse_extraction_output, ExtractionRecord, ParsedRecords, RecordBody,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DocumentCategory {
    Artists,
    ArtSchools,
    ArtTypes,
    CulturalEvents,
    ArtMovements,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub category: DocumentCategory,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = CorpusManifest { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Reads a JSON array of `{id, path, category}`; relative paths resolve
    /// against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries: Vec<ManifestEntry> =
            serde_json::from_str(&text).map_err(|e| Error::Validation(format!("manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        CorpusManifest::new(entries)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.id.trim().is_empty() {
                return Err(Error::Validation("manifest entry with empty id".into()));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Validation(format!("duplicate document id {:?}", e.id)));
            }
            let p = e.path.to_string_lossy();
            if p.starts_with("http://") || p.starts_with("https://") {
                return Err(Error::Validation(format!(
                    "document {:?}: remote sources are not fetched, download {p} first",
                    e.id
                )));
            }
        }
        Ok(())
    }
}

/// Reads every manifest document and splits it into chunks, in manifest order.
pub fn ingest(manifest: &CorpusManifest, config: &ChunkConfig) -> Result<Vec<Chunk>> {
    let mut chunks = Vec::new();
    for entry in &manifest.entries {
        let text = std::fs::read_to_string(&entry.path).map_err(|e| Error::io(&entry.path, e))?;
        chunks.extend(chunk_document(&entry.id, &text, config)?);
    }
    Ok(chunks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub chunking: ChunkConfig,
    pub dedup_threshold: f64,
    pub allowed_types: BTreeSet<NodeType>,
    pub prompts: PromptSet,
    /// When set, the raw graph, cleaned graph and cleaning report are written here.
    pub output_dir: Option<PathBuf>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            chunking: ChunkConfig::default(),
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
            allowed_types: NodeType::ALL.into_iter().collect(),
            prompts: PromptSet::default(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub graph: Ackg,
    pub raw_graph: Ackg,
    pub report: CleaningReport,
    pub warnings: Vec<String>,
}

pub const RAW_GRAPH_FILE: &str = "raw_graph.jsonl";
pub const GRAPH_FILE: &str = "graph.jsonl";
pub const REPORT_JSON_FILE: &str = "cleaning_report.json";
pub const REPORT_TEXT_FILE: &str = "cleaning_report.txt";

/// chunk → extract → aggregate → dedup → filter (→ persist).
pub fn build_ackg(gateway: &Gateway, manifest: &CorpusManifest, config: &BuildConfig) -> Result<BuildOutput> {
    if !(config.dedup_threshold > 0.0 && config.dedup_threshold <= 1.0) {
        return Err(Error::Validation(format!(
            "dedup threshold {} outside (0, 1]",
            config.dedup_threshold
        )));
    }
    manifest.validate().stage(Stage::Load)?;
    let chunks = ingest(manifest, &config.chunking).stage(Stage::Chunk)?;
    log::info!("{} documents, {} chunks", manifest.entries.len(), chunks.len());

    // Completion order does not matter: results are collected in chunk order.
    let parsed: Vec<ParsedRecords> = chunks
        .par_iter()
        .map(|c| extract_candidates(gateway, c, &config.prompts))
        .collect::<Result<_>>()
        .stage(Stage::Extract)?;

    let mut warnings = Vec::new();
    let mut records = Vec::new();
    for p in parsed {
        warnings.extend(p.warnings);
        records.extend(p.records);
    }
    let (raw_graph, agg_warnings) = aggregate_candidates(&records);
    warnings.extend(agg_warnings);

    let (deduped, mut report) = dedup_nodes(raw_graph.clone(), config.dedup_threshold);
    let (graph, filtered) = filter_by_type(deduped, &config.allowed_types);
    report.filtered = filtered;
    report.nodes_after = graph.node_count();
    report.edges_after = graph.edge_count();
    graph.check_consistency().stage(Stage::Clean)?;

    if let Some(dir) = &config.output_dir {
        persist_build(dir, &raw_graph, &graph, &report).stage(Stage::Persist)?;
    }
    Ok(BuildOutput {
        graph,
        raw_graph,
        report,
        warnings,
    })
}

fn persist_build(dir: &Path, raw: &Ackg, graph: &Ackg, report: &CleaningReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_graph(raw, &dir.join(RAW_GRAPH_FILE))?;
    save_graph(graph, &dir.join(GRAPH_FILE))?;
    let json = serde_json::to_string_pretty(report)?;
    let path = dir.join(REPORT_JSON_FILE);
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    let path = dir.join(REPORT_TEXT_FILE);
    std::fs::write(&path, report.summary()).map_err(|e| Error::io(&path, e))
}
