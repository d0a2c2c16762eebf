use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use artctx_core::config::AppConfig;
use artctx_core::construct::{build_ackg, ingest, BuildConfig, ChunkConfig, CorpusManifest};
use artctx_core::gateway::Gateway;
use artctx_core::graph::load_graph;
use artctx_core::index::{build_index, ids_path, IndexConfig};
use artctx_core::metrics::{evaluate_corpus, EvalPair};
use artctx_core::pipeline::{to_json, Pipeline, QueryOverrides};
use artctx_core::prompts::PromptSet;
use serde::Deserialize;

use crate::args::{BuildArgs, ChunkArgs, Cli, Command, EvalArgs, ExplainArgs, IngestArgs, OutputFormat, QueryArgs};

/// Runs one parsed command, writing results to `out`. Diagnostics go to the
/// log.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    let resolve = |query: Option<&QueryArgs>, bind: Option<&str>| {
        AppConfig::resolve(g.config.as_deref(), &g.overrides(query, bind)).context("config")
    };
    match &cli.command {
        Command::Ingest(args) => ingest_cmd(args, out).context("ingest"),
        Command::BuildGraph(args) => build_cmd(&resolve(None, None)?, args, out).context("build-graph"),
        Command::Stats => stats_cmd(&resolve(None, None)?, out).context("stats"),
        Command::Index => index_cmd(&resolve(None, None)?, out).context("index"),
        Command::Retrieve(q) => retrieve_cmd(&resolve(Some(q), None)?, q, out).context("retrieve"),
        Command::Explain(args) => explain_cmd(&resolve(Some(&args.query), None)?, args, out).context("explain"),
        Command::Eval(args) => eval_cmd(&resolve(None, None)?, args, out).context("eval"),
        Command::Serve(args) => {
            let config = resolve(None, args.bind.as_deref())?;
            crate::service::serve_blocking(&config).context("serve")
        }
    }
}

fn chunk_config(args: &ChunkArgs) -> Result<ChunkConfig> {
    Ok(ChunkConfig::new(args.window, args.overlap)?)
}

fn ingest_cmd(args: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = CorpusManifest::load(&args.manifest)?;
    let chunks = ingest(&manifest, &chunk_config(&args.chunking)?)?;
    let mut sink: Box<dyn Write + '_> = match &args.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(&mut *out),
    };
    for c in &chunks {
        serde_json::to_writer(&mut sink, c)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    log::info!("{} chunks from {} documents", chunks.len(), manifest.entries.len());
    Ok(())
}

fn prompt_set(config: &AppConfig) -> Result<PromptSet> {
    Ok(match &config.paths.prompts {
        Some(dir) => PromptSet::from_dir(dir)?,
        None => PromptSet::default(),
    })
}

fn build_cmd(config: &AppConfig, args: &BuildArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = CorpusManifest::load(&args.manifest)?;
    let gateway = Gateway::from_config(&config.gateway)?;
    std::fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    let build = BuildConfig {
        chunking: chunk_config(&args.chunking)?,
        dedup_threshold: args.threshold,
        prompts: prompt_set(config)?,
        output_dir: Some(args.output.clone()),
        ..Default::default()
    };
    let result = build_ackg(&gateway, &manifest, &build)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    write!(out, "{}", result.report.summary())?;
    writeln!(out)?;
    write!(out, "{}", result.graph.stats().render_table())?;
    Ok(())
}

fn stats_cmd(config: &AppConfig, out: &mut dyn Write) -> Result<()> {
    let graph = load_graph(config.graph_path()?)?;
    write!(out, "{}", graph.stats().render_table())?;
    Ok(())
}

fn index_cmd(config: &AppConfig, out: &mut dyn Write) -> Result<()> {
    let graph = load_graph(config.graph_path()?)?;
    let path = config.index_path()?;
    let gateway = Gateway::from_config(&config.gateway)?;
    let index = build_index(&gateway, &graph, &IndexConfig::default())?;
    index.save(path)?;
    writeln!(
        out,
        "indexed {} nodes (dim {}) -> {} + {}",
        index.len(),
        index.dim(),
        path.display(),
        ids_path(path).display()
    )?;
    Ok(())
}

fn retrieve_cmd(config: &AppConfig, query: &QueryArgs, out: &mut dyn Write) -> Result<()> {
    let painting = query.painting();
    painting.validate()?;
    let pipeline = Pipeline::from_config(config)?;
    let sub = pipeline.retrieve(&painting, &QueryOverrides::default())?;
    out.write_all(to_json(&sub)?.as_bytes())?;
    Ok(())
}

fn explain_cmd(config: &AppConfig, args: &ExplainArgs, out: &mut dyn Write) -> Result<()> {
    let painting = args.query.painting();
    painting.validate()?;
    let pipeline = Pipeline::from_config(config)?;
    let result = pipeline.explain(&painting, &QueryOverrides::default())?;
    match args.output {
        OutputFormat::Json => out.write_all(to_json(&result)?.as_bytes())?,
        OutputFormat::Text => writeln!(out, "{}", result.explanation.trim_end())?,
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateLine {
    id: String,
    candidate: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceLine {
    id: String,
    references: Vec<String>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(rows)
}

/// Pairs candidates with references by id, in candidate order.
pub fn load_eval_pairs(candidates: &Path, references: &Path) -> Result<Vec<EvalPair>> {
    let mut refs: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in read_jsonl::<ReferenceLine>(references)? {
        if refs.insert(r.id.clone(), r.references).is_some() {
            bail!("duplicate reference id {:?}", r.id);
        }
    }
    let mut pairs = Vec::new();
    for c in read_jsonl::<CandidateLine>(candidates)? {
        let Some(references) = refs.remove(&c.id) else {
            bail!("candidate {:?} has no references", c.id);
        };
        pairs.push(EvalPair {
            id: c.id,
            candidate: c.candidate,
            references,
        });
    }
    if let Some(id) = refs.keys().next() {
        bail!("reference {id:?} has no candidate");
    }
    Ok(pairs)
}

fn eval_cmd(config: &AppConfig, args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let pairs = load_eval_pairs(&args.candidates, &args.references)?;
    let report = evaluate_corpus(&pairs, &config.metrics)?;
    write!(out, "{}", report.render_table())?;
    if let Some(path) = &args.report {
        std::fs::write(path, to_json(&report)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
