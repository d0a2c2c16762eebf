use std::path::PathBuf;

use artctx_core::config::Overrides;
use artctx_core::gateway::{BackendKind, ImageRef};
use artctx_core::retriever::PaintingQuery;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "artctx",
    version,
    about = "Art context knowledge graph: build, retrieve, explain, evaluate"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand. Flags beat `ARTCTX_*` variables,
/// which beat the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file (default: $ARTCTX_CONFIG, else built-in defaults).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Graph JSONL file.
    #[arg(long, global = true, value_name = "FILE")]
    pub graph: Option<PathBuf>,

    /// Vector index file (ids in FILE.ids.json).
    #[arg(long, global = true, value_name = "FILE")]
    pub index: Option<PathBuf>,

    /// Directory of prompt overrides.
    #[arg(long, global = true, value_name = "DIR")]
    pub prompts: Option<PathBuf>,

    /// Explanation template (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub template: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,

    /// Base URL of an OpenAI-compatible provider.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,

    /// Fixture file for the mock backend.
    #[arg(long, global = true, value_name = "FILE")]
    pub mock_fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Mock,
    Remote,
}

impl From<Backend> for BackendKind {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Mock => BackendKind::Mock,
            Backend::Remote => BackendKind::Remote,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chunk the manifest's documents and write them as JSONL.
    Ingest(IngestArgs),
    /// Extract, aggregate and clean a graph from a corpus manifest.
    BuildGraph(BuildArgs),
    /// Per-type node and edge counts.
    Stats,
    /// Embed every graph node and write the vector index.
    Index,
    /// Retrieve the context subgraph for a painting (JSON on stdout).
    Retrieve(QueryArgs),
    /// Retrieve context and generate an explanation.
    Explain(ExplainArgs),
    /// BLEU-1..4 and ROUGE-L for candidate explanations.
    Eval(EvalArgs),
    /// Serve the pipeline over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChunkArgs {
    /// Window size in whitespace tokens.
    #[arg(long, default_value_t = 1000)]
    pub window: usize,

    /// Tokens shared by consecutive windows.
    #[arg(long, default_value_t = 100)]
    pub overlap: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,

    #[command(flatten)]
    pub chunking: ChunkArgs,

    /// Output JSONL (stdout when omitted).
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,

    /// Directory for the raw graph, cleaned graph and cleaning report.
    #[arg(long, short, value_name = "DIR")]
    pub output: PathBuf,

    #[command(flatten)]
    pub chunking: ChunkArgs,

    /// Name similarity above which same-typed nodes merge.
    #[arg(long, default_value_t = artctx_core::construct::DEFAULT_DEDUP_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, Args)]
pub struct QueryArgs {
    /// Painting image file.
    #[arg(long, value_name = "FILE")]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub artist: Option<String>,
    #[arg(long)]
    pub technique: Option<String>,
    #[arg(long)]
    pub timeframe: Option<String>,
    #[arg(long = "type", value_name = "TYPE")]
    pub art_type: Option<String>,
    #[arg(long)]
    pub school: Option<String>,
    /// Extra attribute as KEY=VALUE; repeatable.
    #[arg(long = "attr", value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub attrs: Vec<(String, String)>,
    /// Question or instruction for the explanation.
    #[arg(long)]
    pub question: Option<String>,

    /// Coarse seed count.
    #[arg(long)]
    pub k_coarse: Option<usize>,
    /// Candidate count after expansion.
    #[arg(long)]
    pub k: Option<usize>,
    /// Nodes kept after pruning.
    #[arg(long)]
    pub m: Option<usize>,
    /// Weight of the multimodal score against centrality.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of detected concepts.
    #[arg(long)]
    pub concepts: Option<usize>,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    if k.trim().is_empty() {
        return Err(format!("empty key in {s:?}"));
    }
    Ok((k.trim().to_owned(), v.trim().to_owned()))
}

impl QueryArgs {
    pub fn painting(&self) -> PaintingQuery {
        let named = [
            ("title", &self.title),
            ("artist", &self.artist),
            ("technique", &self.technique),
            ("timeframe", &self.timeframe),
            ("type", &self.art_type),
            ("school", &self.school),
        ];
        let mut pairs: Vec<(String, String)> = self.attrs.clone();
        pairs.extend(
            named
                .into_iter()
                .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_owned(), v.clone()))),
        );
        let mut painting = PaintingQuery::from_attributes(pairs);
        if let Some(path) = &self.image {
            painting = painting.with_image(ImageRef::Path(path.clone()));
        }
        if let Some(q) = &self.question {
            painting = painting.with_question(q.clone());
        }
        painting
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub query: QueryArgs,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL of `{"id", "candidate"}`.
    #[arg(long, value_name = "FILE")]
    pub candidates: PathBuf,

    /// JSONL of `{"id", "references": [..]}`.
    #[arg(long, value_name = "FILE")]
    pub references: PathBuf,

    /// Also write the full per-pair report as JSON.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to listen on.
    #[arg(long)]
    pub bind: Option<String>,
}

impl GlobalArgs {
    /// Flag layer for config resolution. Query flags are included when given.
    pub fn overrides(&self, query: Option<&QueryArgs>, bind: Option<&str>) -> Overrides {
        let q = query.cloned().unwrap_or_default();
        Overrides {
            graph: self.graph.clone(),
            index: self.index.clone(),
            prompts: self.prompts.clone(),
            template: self.template.clone(),
            backend: self.backend.map(Into::into),
            endpoint: self.endpoint.clone(),
            mock_fixtures: self.mock_fixtures.clone(),
            k_coarse: q.k_coarse,
            k: q.k,
            m: q.m,
            lambda: q.lambda,
            n_concepts: q.concepts,
            bind: bind.map(str::to_owned),
        }
    }
}
