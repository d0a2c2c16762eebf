use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{ChatRequest, ChatResponse, EmbeddingVector, Usage};
use crate::error::{Error, Result};

pub const MOCK_EMBEDDING_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn mock_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
}

/// Hashed bag-of-words embedding: token counts bucketed by FNV-1a mod 256,
/// then L2-normalized. Token-free input maps to the unit vector on axis 0.
pub fn mock_embedding(text: &str) -> EmbeddingVector<f32> {
    let mut counts = vec![0f64; MOCK_EMBEDDING_DIM];
    for token in mock_tokens(text) {
        counts[(fnv1a64(token.as_bytes()) % MOCK_EMBEDDING_DIM as u64) as usize] += 1.0;
    }
    let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 {
        counts[0] = 1.0;
    } else {
        counts.iter_mut().for_each(|c| *c /= norm);
    }
    EmbeddingVector::new(counts.into_iter().map(|c| c as f32).collect()).expect("finite by construction")
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Fixture {
    pub marker: String,
    pub response: String,
}

/// Scripted chat backend. A request is answered by the first fixture whose
/// marker occurs in any message; otherwise the last user message is echoed.
#[derive(Debug, Default)]
pub struct MockScript {
    fixtures: Vec<Fixture>,
    log: Mutex<Vec<String>>,
}

impl Clone for MockScript {
    fn clone(&self) -> Self {
        MockScript {
            fixtures: self.fixtures.clone(),
            log: Mutex::new(Vec::new()),
        }
    }
}

impl MockScript {
    pub fn new<M, R>(fixtures: impl IntoIterator<Item = (M, R)>) -> Self
    where
        M: Into<String>,
        R: Into<String>,
    {
        MockScript {
            fixtures: fixtures
                .into_iter()
                .map(|(m, r)| Fixture {
                    marker: m.into(),
                    response: r.into(),
                })
                .collect(),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let fixtures: Vec<Fixture> =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(MockScript {
            fixtures,
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn fixtures(&self) -> &[Fixture] {
        &self.fixtures
    }

    /// Full prompt text of every chat call served so far.
    pub fn calls(&self) -> Vec<String> {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub(super) fn chat(&self, request: &ChatRequest) -> ChatResponse {
        let prompt: String = request
            .messages
            .iter()
            .map(|m| m.text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let text = self
            .fixtures
            .iter()
            .find(|f| prompt.contains(&f.marker))
            .map(|f| f.response.clone())
            .unwrap_or_else(|| request.last_user_text().unwrap_or_default().to_owned());
        let usage = Usage {
            prompt_tokens: prompt.split_whitespace().count() as u64,
            completion_tokens: text.split_whitespace().count() as u64,
        };
        self.log.lock().unwrap_or_else(|p| p.into_inner()).push(prompt);
        ChatResponse {
            text,
            usage: Some(usage),
        }
    }
}
