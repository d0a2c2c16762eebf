//! Loaded graph, index and gateway bundled for repeated queries. The CLI and
//! the HTTP service both go through [`Pipeline`] and [`to_json`], so they
//! produce identical output for identical inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::AppConfig;
use crate::error::{Error, Result, Stage, StageExt};
use crate::gateway::Gateway;
use crate::generate::{explain, generate_explanation, ExplainConfig, GenerationResult, PromptTemplate};
use crate::graph::{load_graph, Ackg};
use crate::index::VectorIndex;
use crate::prompts::PromptSet;
use crate::retriever::{retrieve_context, ContextSubgraph, PaintingQuery, RetrieverConfig};

/// Per-query retriever settings; unset fields keep the configured value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryOverrides {
    pub k_coarse: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub n_concepts: Option<usize>,
}

impl QueryOverrides {
    pub fn apply(&self, base: &RetrieverConfig) -> Result<RetrieverConfig> {
        let mut c = base.clone();
        if let Some(v) = self.k_coarse {
            c.k_coarse = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.n_concepts {
            c.n_concepts = v;
        }
        c.validate()?;
        Ok(c)
    }
}

pub struct Pipeline {
    pub gateway: Gateway,
    pub graph: Ackg,
    pub index: VectorIndex<f32>,
    pub config: ExplainConfig,
}

impl Pipeline {
    pub fn new(gateway: Gateway, graph: Ackg, index: VectorIndex<f32>, config: ExplainConfig) -> Result<Self> {
        check_index_matches(&graph, &index)?;
        Ok(Pipeline {
            gateway,
            graph,
            index,
            config,
        })
    }

    /// Loads graph, index, prompts and template named by `app` and builds
    /// the gateway.
    pub fn from_config(app: &AppConfig) -> Result<Self> {
        let graph = load_graph(app.graph_path()?).stage(Stage::Load)?;
        let index = VectorIndex::load(app.index_path()?).stage(Stage::Load)?;
        let prompts = match &app.paths.prompts {
            Some(dir) => PromptSet::from_dir(dir)?,
            None => PromptSet::default(),
        };
        let template = match &app.paths.template {
            Some(path) => PromptTemplate::load(path)?,
            None => PromptTemplate::default(),
        };
        let gateway = Gateway::from_config(&app.gateway)?;
        Pipeline::new(
            gateway,
            graph,
            index,
            ExplainConfig {
                prompts,
                template,
                retriever: app.retriever.clone(),
                generation: app.generation.clone(),
            },
        )
    }

    fn with_overrides(&self, overrides: &QueryOverrides) -> Result<ExplainConfig> {
        Ok(ExplainConfig {
            retriever: overrides.apply(&self.config.retriever)?,
            ..self.config.clone()
        })
    }

    pub fn retrieve(&self, painting: &PaintingQuery, overrides: &QueryOverrides) -> Result<ContextSubgraph<f64>> {
        let cfg = self.with_overrides(overrides)?;
        retrieve_context(
            &self.gateway,
            &self.graph,
            &self.index,
            &cfg.prompts,
            painting,
            &cfg.retriever,
        )
    }

    pub fn explain(&self, painting: &PaintingQuery, overrides: &QueryOverrides) -> Result<GenerationResult> {
        let cfg = self.with_overrides(overrides)?;
        explain(&self.gateway, &self.graph, &self.index, painting, &cfg)
    }

    /// Generation only, from a subgraph retrieved earlier.
    pub fn explain_subgraph(
        &self,
        painting: &PaintingQuery,
        subgraph: ContextSubgraph<f64>,
    ) -> Result<GenerationResult> {
        generate_explanation(
            &self.gateway,
            &self.config.template,
            painting,
            subgraph,
            &self.config.generation,
        )
    }

    /// Node and edge counts of the graph and the index size.
    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        BTreeMap::from([
            ("nodes", self.graph.node_count()),
            ("edges", self.graph.edge_count()),
            ("indexed", self.index.len()),
        ])
    }
}

/// Every indexed id must be a graph node.
fn check_index_matches(graph: &Ackg, index: &VectorIndex<f32>) -> Result<()> {
    if let Some(id) = index.ids().iter().find(|id| !graph.contains(id)) {
        return Err(Error::Integrity {
            line: 0,
            message: format!("index holds {id}, which is not in the graph"),
        });
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockScript;
    use crate::graph::{KgNode, NodeId, NodeType};

    #[test]
    fn overrides_apply_and_validate() {
        let base = RetrieverConfig::default();
        let o = QueryOverrides {
            m: Some(3),
            lambda: Some(1.0),
            ..Default::default()
        };
        let c = o.apply(&base).unwrap();
        assert_eq!((c.m, c.lambda, c.k), (3, 1.0, 10));
        let bad = QueryOverrides {
            k: Some(2),
            ..Default::default()
        };
        assert!(bad.apply(&base).is_err());
    }

    #[test]
    fn index_must_match_graph() {
        let mut g = Ackg::new();
        g.upsert_node(KgNode::new("Monet", NodeType::Artist, "")).unwrap();
        let mut idx = VectorIndex::new(2);
        idx.insert(NodeId::from("ghost"), &[1.0, 0.0]).unwrap();
        let gw = Gateway::mock(MockScript::default());
        assert!(Pipeline::new(gw, g, idx, ExplainConfig::default()).is_err());
    }
}
