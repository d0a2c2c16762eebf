use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splits text into tokens, reported as byte ranges into the input.
pub trait Tokenizer: Send + Sync {
    fn token_spans(&self, text: &str) -> Vec<(usize, usize)>;
}

/// Whitespace-delimited words.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn token_spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    spans.push((s, i));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            spans.push((s, text.len()));
        }
        spans
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkConfig {
    pub window_tokens: usize,
    pub overlap_tokens: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            window_tokens: 1000,
            overlap_tokens: 100,
        }
    }
}

impl ChunkConfig {
    pub fn new(window_tokens: usize, overlap_tokens: usize) -> Result<Self> {
        let config = ChunkConfig {
            window_tokens,
            overlap_tokens,
        };
        config.validate()?;
        Ok(config)
    }

    /// Windows that start every `stride` tokens (overlap = window - stride).
    pub fn strict_stride(window_tokens: usize, stride: usize) -> Result<Self> {
        if stride == 0 || stride > window_tokens {
            return Err(Error::Validation(format!(
                "stride {stride} must be in 1..={window_tokens}"
            )));
        }
        ChunkConfig::new(window_tokens, window_tokens - stride)
    }

    pub fn step(&self) -> usize {
        self.window_tokens - self.overlap_tokens
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_tokens <= self.overlap_tokens {
            return Err(Error::Validation(format!(
                "window ({}) must exceed overlap ({})",
                self.window_tokens, self.overlap_tokens
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub document: String,
    pub index: usize,
    pub text: String,
    /// Token span `[start, end)`.
    pub span: (usize, usize),
}

pub fn chunk_document(document: &str, text: &str, config: &ChunkConfig) -> Result<Vec<Chunk>> {
    chunk_document_with(document, text, config, &WhitespaceTokenizer)
}

pub fn chunk_document_with(
    document: &str,
    text: &str,
    config: &ChunkConfig,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<Chunk>> {
    config.validate()?;
    let tokens = tokenizer.token_spans(text);
    let spans = window_spans(tokens.len(), config);
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| Chunk {
            document: document.to_owned(),
            index,
            text: text[tokens[start].0..tokens[end - 1].1].to_owned(),
            span: (start, end),
        })
        .collect())
}

/// Token spans of the sliding windows over `n` tokens.
pub fn window_spans(n: usize, config: &ChunkConfig) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + config.window_tokens).min(n);
        spans.push((start, end));
        if end == n {
            break;
        }
        start += config.step();
    }
    spans
}
