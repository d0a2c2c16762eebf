use serde::Serialize;

use super::PaintingQuery;
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, Gateway};
use crate::prompts::{render, PromptSet};

/// Fixed-size list of short descriptors for a painting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptList {
    pub concepts: Vec<String>,
    pub target: usize,
}

/// Items of a Markdown bulleted or numbered list. A leading `**bold**` span
/// is taken as the concept; duplicates (case-insensitive) are dropped.
pub fn parse_concept_list(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        let Some(item) = list_item(line.trim()) else {
            continue;
        };
        let concept = bold_lead(item).unwrap_or(item);
        let concept = concept
            .trim_matches(|c: char| c == '*' || c == '_' || c == '`' || c.is_whitespace())
            .trim_end_matches(['.', ':', ';', ','])
            .trim();
        if concept.is_empty() || out.iter().any(|c| c.eq_ignore_ascii_case(concept)) {
            continue;
        }
        out.push(concept.to_owned());
    }
    out
}

fn list_item(line: &str) -> Option<&str> {
    for bullet in ["- ", "* ", "+ ", "• "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return Some(rest.trim());
        }
    }
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return Some(rest.trim());
        }
    }
    None
}

fn bold_lead(item: &str) -> Option<&str> {
    let rest = item.strip_prefix("**")?;
    let end = rest.find("**")?;
    Some(&rest[..end])
}

pub fn concept_request(prompts: &PromptSet, painting: &PaintingQuery, n: usize) -> ChatRequest {
    let attributes = painting.attribute_bullets();
    let n_text = n.to_string();
    let prompt = render(
        &prompts.concepts,
        &[("attributes", &attributes), ("n_concepts", &n_text)],
    );
    ChatRequest::new().user_with_images(prompt, painting.image.iter().cloned().collect())
}

/// Asks the vision model for `n` concepts. Extras are cut; a short answer is
/// retried once and then padded with attribute values.
pub fn detect_concepts(
    gateway: &Gateway,
    prompts: &PromptSet,
    painting: &PaintingQuery,
    n: usize,
) -> Result<ConceptList> {
    painting.validate()?;
    if n == 0 {
        return Ok(ConceptList {
            concepts: Vec::new(),
            target: 0,
        });
    }
    let request = concept_request(prompts, painting, n);
    let mut concepts = parse_concept_list(&gateway.chat(&request)?.text);
    if concepts.len() < n {
        let retry = parse_concept_list(&gateway.chat(&request)?.text);
        if retry.len() > concepts.len() {
            concepts = retry;
        }
    }
    if concepts.is_empty() {
        return Err(Error::ConceptDetection("no list items in two responses".into()));
    }
    concepts.truncate(n);
    for (_, value) in painting.ordered_attributes() {
        if concepts.len() >= n {
            break;
        }
        let value = value.trim();
        if !value.is_empty() && !concepts.iter().any(|c| c.eq_ignore_ascii_case(value)) {
            concepts.push(value.to_owned());
        }
    }
    Ok(ConceptList { concepts, target: n })
}
