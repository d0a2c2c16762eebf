//! Plain-text prompt templates with `{name}` placeholders.
//!
//! Defaults are compiled in; a directory may override any of them by
//! providing a file of the same name.

use std::path::Path;

use crate::error::{Error, Result};

const EXTRACTION: &str = include_str!("../templates/extraction.txt");
const EXTRACTION_EXAMPLES: &str = include_str!("../templates/extraction_examples.txt");
const CONCEPTS: &str = include_str!("../templates/concepts.txt");
const RANKING: &str = include_str!("../templates/ranking.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub extraction: String,
    pub extraction_examples: String,
    pub concepts: String,
    pub ranking: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            extraction: EXTRACTION.to_owned(),
            extraction_examples: EXTRACTION_EXAMPLES.to_owned(),
            concepts: CONCEPTS.to_owned(),
            ranking: RANKING.to_owned(),
        }
    }
}

impl PromptSet {
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut set = PromptSet::default();
        for (file, slot) in [
            ("extraction.txt", &mut set.extraction),
            ("extraction_examples.txt", &mut set.extraction_examples),
            ("concepts.txt", &mut set.concepts),
            ("ranking.txt", &mut set.ranking),
        ] {
            let path = dir.join(file);
            if path.is_file() {
                *slot = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            }
        }
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        require(
            &self.extraction,
            "extraction",
            &["entity_types", "input_text", "examples"],
        )?;
        require(&self.concepts, "concepts", &["attributes"])?;
        require(&self.ranking, "ranking", &["attributes", "candidates"])?;
        Ok(())
    }
}

fn require(template: &str, name: &str, placeholders: &[&str]) -> Result<()> {
    for p in placeholders {
        if !template.contains(&format!("{{{p}}}")) {
            return Err(Error::Template(format!("{name} template lacks {{{p}}}")));
        }
    }
    Ok(())
}

/// Substitutes `{name}` placeholders in one pass; inserted values are never
/// re-scanned and unknown placeholders are left untouched.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| {
            let key = &after[..close];
            values.iter().find(|(k, _)| *k == key).map(|(_, v)| (v, close))
        });
        match replaced {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Number of times `{name}` occurs in `template`.
pub fn placeholder_count(template: &str, name: &str) -> usize {
    template.matches(&format!("{{{name}}}")).count()
}
