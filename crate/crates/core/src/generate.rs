//! Explanation generation: linearize the context subgraph, assemble the
//! few-shot prompt, call the chat model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::gateway::{ChatRequest, Gateway, Usage};
use crate::graph::{edge_key, Ackg, NodeId};
use crate::index::{truncate_chars, VectorIndex};
use crate::prompts::{placeholder_count, render, PromptSet};
use crate::retriever::{retrieve_context, ContextSubgraph, PaintingQuery, RetrieverConfig};
use crate::scalar::Scalar;

pub const DEFAULT_INSTRUCTION: &str =
    "Describe and explain this painting, covering content and its artistic, cultural, and historical context.";
pub const DEFAULT_PROMPT_BUDGET: usize = 16_000;
const DEFAULT_TEMPLATE: &str = include_str!("../templates/explain.toml");
const PLACEHOLDERS: [&str; 3] = ["attributes", "subgraph", "question"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FewShotExample {
    pub attributes: String,
    pub subgraph: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub system: String,
    #[serde(default)]
    pub examples: Vec<FewShotExample>,
    pub context_header: String,
    /// Holds `{attributes}`, `{subgraph}` and `{question}`, once each.
    pub instruction: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::from_toml(DEFAULT_TEMPLATE).expect("bundled template is valid")
    }
}

impl PromptTemplate {
    pub fn from_toml(text: &str) -> Result<Self> {
        let t: PromptTemplate = toml::from_str(text).map_err(|e| Error::Template(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PromptTemplate::from_toml(&text).map_err(|e| e.context(format!("template {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        for name in PLACEHOLDERS {
            let n = placeholder_count(&self.instruction, name);
            if n != 1 {
                return Err(Error::Template(format!(
                    "instruction must contain {{{name}}} exactly once, found {n}"
                )));
            }
        }
        for (i, ex) in self.examples.iter().enumerate() {
            if ex.attributes.trim().is_empty() || ex.subgraph.trim().is_empty() || ex.explanation.trim().is_empty() {
                return Err(Error::Template(format!("example {} has an empty part", i + 1)));
            }
        }
        Ok(())
    }

    fn few_shot_block(&self) -> String {
        self.examples
            .iter()
            .enumerate()
            .map(|(i, ex)| {
                format!(
                    "### EXAMPLE {}\nMetadata:\n{}\n\nContext:\n{}\n\nExplanation:\n{}\n\n",
                    i + 1,
                    ex.attributes.trim_end(),
                    ex.subgraph.trim_end(),
                    ex.explanation.trim_end()
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Upper bound on system plus user prompt length, in characters.
    pub prompt_char_budget: usize,
    /// Task text used when the query carries no question.
    pub default_instruction: String,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            prompt_char_budget: DEFAULT_PROMPT_BUDGET,
            default_instruction: DEFAULT_INSTRUCTION.to_owned(),
        }
    }
}

/// Nodes by descending score (ties by id), then edges by endpoint pair.
/// Descriptions are cut to `description_chars` when given.
pub fn linearize_subgraph_with<T: Scalar>(subgraph: &ContextSubgraph<T>, description_chars: Option<usize>) -> String {
    let cut = |s: &str| match description_chars {
        Some(n) => truncate_chars(s, n).to_owned(),
        None => s.to_owned(),
    };
    let line = |head: String, desc: &str| {
        let desc = cut(desc);
        if desc.is_empty() {
            format!("- {head}")
        } else {
            format!("- {head}: {desc}")
        }
    };

    let mut nodes: Vec<_> = subgraph.nodes.iter().collect();
    nodes.sort_by(|a, b| {
        b.s.partial_cmp(&a.s)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    let mut edges: Vec<_> = subgraph.edges.iter().collect();
    edges.sort_by_key(|e| edge_key(&e.source, &e.target));

    let mut out = String::from("Entities:");
    if nodes.is_empty() {
        out.push_str(" (none)");
    }
    for n in nodes {
        out.push('\n');
        out.push_str(&line(format!("{} ({})", n.name, n.node_type), &n.description));
    }
    out.push_str("\nRelations:");
    if edges.is_empty() {
        out.push_str(" (none)");
    }
    for e in edges {
        out.push('\n');
        out.push_str(&line(format!("{} -> {}", e.source_name, e.target_name), &e.description));
    }
    out
}

pub fn linearize_subgraph<T: Scalar>(subgraph: &ContextSubgraph<T>) -> String {
    linearize_subgraph_with(subgraph, None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub system: String,
    pub user: String,
}

impl PromptText {
    pub fn char_len(&self) -> usize {
        self.system.chars().count() + self.user.chars().count()
    }
}

#[derive(Debug, Clone)]
pub struct BuiltPrompt {
    pub request: ChatRequest,
    pub text: PromptText,
    /// Per-description cut applied to fit the budget, if any.
    pub description_chars: Option<usize>,
}

fn render_user<T: Scalar>(
    template: &PromptTemplate,
    attributes: &str,
    subgraph: &ContextSubgraph<T>,
    question: &str,
    description_chars: Option<usize>,
) -> String {
    let body = render(
        &template.instruction,
        &[
            ("attributes", attributes),
            ("subgraph", &linearize_subgraph_with(subgraph, description_chars)),
            ("question", question),
        ],
    );
    format!("{}{}\n{}", template.few_shot_block(), template.context_header, body)
}

/// System message is the preamble; the user message holds the examples,
/// metadata, linearized subgraph and the question (or the default
/// instruction). When the prompt exceeds the budget, node and edge
/// descriptions are cut to the longest common length that fits.
pub fn build_prompt<T: Scalar>(
    template: &PromptTemplate,
    painting: &PaintingQuery,
    subgraph: &ContextSubgraph<T>,
    config: &GenerationConfig,
) -> Result<BuiltPrompt> {
    template.validate()?;
    let attributes = painting.attribute_bullets();
    let question = painting.question.as_deref().unwrap_or(&config.default_instruction);
    let system = template.system.trim().to_owned();
    let fits = |cut: Option<usize>| {
        let user = render_user(template, &attributes, subgraph, question, cut);
        let text = PromptText {
            system: system.clone(),
            user,
        };
        (text.char_len() <= config.prompt_char_budget, text)
    };

    let (ok, mut text) = fits(None);
    let mut description_chars = None;
    if !ok {
        let longest = subgraph
            .nodes
            .iter()
            .map(|n| n.description.chars().count())
            .chain(subgraph.edges.iter().map(|e| e.description.chars().count()))
            .max()
            .unwrap_or(0);
        let (floor_ok, floor_text) = fits(Some(0));
        if !floor_ok {
            return Err(Error::Template(format!(
                "prompt needs {} characters even without descriptions, budget is {}",
                floor_text.char_len(),
                config.prompt_char_budget
            )));
        }
        // Largest cut that fits; length is monotone in the cut.
        let (mut lo, mut hi) = (0usize, longest);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if fits(Some(mid)).0 {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        text = fits(Some(lo)).1;
        description_chars = Some(lo);
    }

    let request = ChatRequest::new()
        .system(text.system.clone())
        .user_with_images(text.user.clone(), painting.image.iter().cloned().collect());
    Ok(BuiltPrompt {
        request,
        text,
        description_chars,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub explanation: String,
    pub prompt: PromptText,
    pub cited_nodes: Vec<NodeId>,
    pub cited_edges: Vec<(NodeId, NodeId)>,
    pub usage: Option<Usage>,
    pub subgraph: ContextSubgraph<f64>,
}

/// Builds the prompt from an already retrieved subgraph and calls the model.
pub fn generate_explanation(
    gateway: &Gateway,
    template: &PromptTemplate,
    painting: &PaintingQuery,
    subgraph: ContextSubgraph<f64>,
    config: &GenerationConfig,
) -> Result<GenerationResult> {
    let built = build_prompt(template, painting, &subgraph, config).stage(Stage::Prompt)?;
    let response = gateway.chat(&built.request).stage(Stage::Generate)?;
    let mut cited_nodes: Vec<NodeId> = subgraph.nodes.iter().map(|n| n.id.clone()).collect();
    cited_nodes.sort();
    let mut cited_edges: Vec<(NodeId, NodeId)> =
        subgraph.edges.iter().map(|e| edge_key(&e.source, &e.target)).collect();
    cited_edges.sort();
    Ok(GenerationResult {
        explanation: response.text,
        prompt: built.text,
        cited_nodes,
        cited_edges,
        usage: response.usage,
        subgraph,
    })
}

/// Everything `explain` needs besides the gateway, graph and index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExplainConfig {
    pub prompts: PromptSet,
    pub template: PromptTemplate,
    pub retriever: RetrieverConfig,
    pub generation: GenerationConfig,
}

/// Retrieval followed by generation.
pub fn explain(
    gateway: &Gateway,
    graph: &Ackg,
    index: &VectorIndex<f32>,
    painting: &PaintingQuery,
    config: &ExplainConfig,
) -> Result<GenerationResult> {
    let subgraph = retrieve_context(gateway, graph, index, &config.prompts, painting, &config.retriever)?;
    generate_explanation(gateway, &config.template, painting, subgraph, &config.generation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ImageRef, MockScript};
    use crate::retriever::{SubgraphEdge, SubgraphNode};

    fn node(id: &str, name: &str, s: f64, desc: &str) -> SubgraphNode<f64> {
        SubgraphNode {
            id: NodeId::from(id),
            name: name.into(),
            node_type: "Theme".into(),
            description: desc.into(),
            provenance: Vec::new(),
            s_ms: 0.0,
            s_gc: 0.0,
            s,
        }
    }

    fn two_node_subgraph() -> ContextSubgraph<f64> {
        ContextSubgraph {
            nodes: vec![
                node("b", "Harvest", 0.3, "Gathering crops."),
                node("a", "Summer", 0.7, "Season."),
            ],
            edges: vec![SubgraphEdge {
                source: NodeId::from("b"),
                target: NodeId::from("a"),
                source_name: "Harvest".into(),
                target_name: "Summer".into(),
                description: "Takes place in".into(),
                provenance: Vec::new(),
            }],
            trace: Default::default(),
        }
    }

    #[test]
    fn empty_subgraph_linearization() {
        assert_eq!(
            linearize_subgraph(&ContextSubgraph::<f64>::default()),
            "Entities: (none)\nRelations: (none)"
        );
    }

    #[test]
    fn linearization_orders_by_score_then_edges() {
        let text = linearize_subgraph(&two_node_subgraph());
        assert_eq!(
            text,
            "Entities:\n- Summer (Theme): Season.\n- Harvest (Theme): Gathering crops.\nRelations:\n- Harvest -> Summer: Takes place in"
        );
        assert_eq!(text, linearize_subgraph(&two_node_subgraph()));
    }

    #[test]
    fn default_template_is_valid() {
        let t = PromptTemplate::default();
        assert_eq!(t.examples.len(), 2);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn template_placeholders_checked() {
        let mut t = PromptTemplate {
            instruction: "{attributes}\n{subgraph}".into(),
            ..Default::default()
        };
        assert!(matches!(t.validate(), Err(Error::Template(_))));
        t.instruction = "{attributes}{subgraph}{question}{question}".into();
        assert!(t.validate().is_err());
        let bad = "system = \"s\"\ncontext_header = \"h\"\ninstruction = \"{attributes} {subgraph}\"\n";
        assert!(PromptTemplate::from_toml(bad).is_err());
    }

    #[test]
    fn question_and_default_instruction() {
        let t = PromptTemplate::default();
        let cfg = GenerationConfig::default();
        let p = PaintingQuery::from_attributes([("title", "Summer")]);
        let built = build_prompt(&t, &p, &two_node_subgraph(), &cfg).unwrap();
        assert!(built.text.user.contains(DEFAULT_INSTRUCTION));
        assert_eq!(built.request.attachment_count(), 0);
        assert_eq!(built.request.messages[0].text, t.system.trim());

        let p = p
            .with_question("Why is the field so yellow?")
            .with_image(ImageRef::from_bytes(vec![1, 2]));
        let built = build_prompt(&t, &p, &two_node_subgraph(), &cfg).unwrap();
        assert!(built.text.user.contains("Why is the field so yellow?"));
        assert!(!built.text.user.contains(DEFAULT_INSTRUCTION));
        assert_eq!(built.request.attachment_count(), 1);
    }

    #[test]
    fn budget_cuts_descriptions() {
        let t = PromptTemplate::default();
        let mut sub = two_node_subgraph();
        for n in &mut sub.nodes {
            n.description = "y".repeat(20_000);
        }
        let p = PaintingQuery::from_attributes([("title", "Summer")]);
        let cfg = GenerationConfig::default();
        let built = build_prompt(&t, &p, &sub, &cfg).unwrap();
        assert!(built.text.char_len() <= cfg.prompt_char_budget);
        let cut = built.description_chars.unwrap();
        assert!(cut > 0 && cut < 20_000);
        // One more character per description would overflow.
        let over = render_user(&t, &p.attribute_bullets(), &sub, DEFAULT_INSTRUCTION, Some(cut + 1));
        assert!(over.chars().count() + built.text.system.chars().count() > cfg.prompt_char_budget);

        let tiny = GenerationConfig {
            prompt_char_budget: 10,
            ..Default::default()
        };
        assert!(matches!(build_prompt(&t, &p, &sub, &tiny), Err(Error::Template(_))));
    }

    #[test]
    fn empty_graph_still_explains() {
        let gw = Gateway::mock(MockScript::new([
            ("### CONCEPTS", "- Harvest"),
            ("### PAINTING", "A summer field."),
        ]));
        let p = PaintingQuery::from_attributes([("title", "Summer")]);
        let out = explain(&gw, &Ackg::new(), &VectorIndex::new(8), &p, &ExplainConfig::default()).unwrap();
        assert_eq!(out.explanation, "A summer field.");
        assert!(out.prompt.user.contains("Entities: (none)\nRelations: (none)"));
        assert!(out.cited_nodes.is_empty());
    }
}
