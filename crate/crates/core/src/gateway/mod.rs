//! The single boundary for language-model traffic: chat completion (with
//! optional images) and text embedding. Nothing outside this module talks to
//! the network.

mod mock;
mod remote;

use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use mock::{mock_embedding, MockScript, MOCK_EMBEDDING_DIM};
pub use remote::ProviderProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// An image given to a vision-capable model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageRef {
    Path(PathBuf),
    Bytes { data: Vec<u8>, media_type: String },
}

impl ImageRef {
    /// Wraps raw bytes, sniffing PNG/GIF/WebP signatures and defaulting to JPEG.
    pub fn from_bytes(data: Vec<u8>) -> Self {
        let media_type = if data.starts_with(b"\x89PNG") {
            "image/png"
        } else if data.starts_with(b"GIF8") {
            "image/gif"
        } else if data.len() > 12 && &data[8..12] == b"WEBP" {
            "image/webp"
        } else {
            "image/jpeg"
        };
        ImageRef::Bytes {
            data,
            media_type: media_type.to_owned(),
        }
    }

    pub fn load(&self) -> Result<(Vec<u8>, String)> {
        match self {
            ImageRef::Bytes { data, media_type } => Ok((data.clone(), media_type.clone())),
            ImageRef::Path(path) => {
                let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                let media_type = if has_ext(path, &["png"]) {
                    "image/png"
                } else if has_ext(path, &["gif"]) {
                    "image/gif"
                } else if has_ext(path, &["webp"]) {
                    "image/webp"
                } else {
                    "image/jpeg"
                };
                Ok((data, media_type.to_owned()))
            }
        }
    }

    /// Short stable description, used in logs and provenance.
    pub fn describe(&self) -> String {
        match self {
            ImageRef::Path(p) => p.display().to_string(),
            ImageRef::Bytes { data, media_type } => format!("<{media_type}, {} bytes>", data.len()),
        }
    }
}

fn has_ext(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub role: Role,
    pub text: String,
    pub images: Vec<ImageRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f32,
    pub max_tokens: Option<u32>,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            max_tokens: Some(1024),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub decoding: Decoding,
}

impl ChatRequest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn system(mut self, text: impl Into<String>) -> Self {
        self.messages.push(Message {
            role: Role::System,
            text: text.into(),
            images: Vec::new(),
        });
        self
    }

    pub fn user(self, text: impl Into<String>) -> Self {
        self.user_with_images(text, Vec::new())
    }

    pub fn user_with_images(mut self, text: impl Into<String>, images: Vec<ImageRef>) -> Self {
        self.messages.push(Message {
            role: Role::User,
            text: text.into(),
            images,
        });
        self
    }

    pub fn attachment_count(&self) -> usize {
        self.messages.iter().map(|m| m.images.len()).sum()
    }

    pub fn has_images(&self) -> bool {
        self.attachment_count() > 0
    }

    pub fn last_user_text(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.text.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if self.messages.is_empty() {
            return Err(Error::Validation("chat request has no messages".into()));
        }
        if let Some(m) = self
            .messages
            .iter()
            .find(|m| m.role != Role::User && !m.images.is_empty())
        {
            return Err(Error::Validation(format!(
                "images may only be attached to user messages, found one on a {} message",
                m.role.as_str()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChatResponse {
    pub text: String,
    pub usage: Option<Usage>,
}

/// Fixed-length embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T = f32> {
    values: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("embedding has zero dimensions".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("embedding has non-finite entries".into()));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    #[default]
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_base_ms: 500,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): `base * 2^(attempt-1)`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.saturating_sub(1).min(16);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    pub credential_env: Option<String>,
    pub chat_model: String,
    pub vision_model: String,
    pub embedding_model: String,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub profile: ProviderProfile,
    /// JSON fixtures for the mock backend: `[{"marker": .., "response": ..}]`.
    pub mock_fixtures: Option<PathBuf>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            backend: BackendKind::Mock,
            endpoint: None,
            credential_env: None,
            chat_model: "gpt-4o-mini".into(),
            vision_model: "gpt-4o-mini".into(),
            embedding_model: "text-embedding-3-small".into(),
            retry: RetryPolicy::default(),
            timeout_secs: 60,
            max_in_flight: 4,
            profile: ProviderProfile::default(),
            mock_fixtures: None,
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        if self.backend == BackendKind::Remote {
            if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                return Err(Error::Config("remote backend requires an endpoint".into()));
            }
            if self.credential_env.as_deref().is_none_or(|e| e.trim().is_empty()) {
                return Err(Error::Config("remote backend requires credential_env".into()));
            }
            if self.retry.max_attempts == 0 {
                return Err(Error::Config("retry.max_attempts must be at least 1".into()));
            }
            if self.timeout_secs == 0 {
                return Err(Error::Config("timeout_secs must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Counting semaphore bounding concurrent provider calls.
#[derive(Debug)]
struct InFlight {
    max: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(max: usize) -> Self {
        InFlight {
            max: max.max(1),
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().unwrap_or_else(|p| p.into_inner());
        while *used >= self.max {
            used = self.freed.wait(used).unwrap_or_else(|p| p.into_inner());
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|p| p.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
enum Backend {
    Mock(MockScript),
    Remote(remote::RemoteBackend),
}

/// Cheap to clone; clones share the backend and the in-flight limit.
#[derive(Debug, Clone)]
pub struct Gateway {
    backend: Arc<Backend>,
    limit: Arc<InFlight>,
}

impl Gateway {
    pub fn from_config(config: &GatewayConfig) -> Result<Self> {
        config.validate()?;
        let backend = match config.backend {
            BackendKind::Mock => match &config.mock_fixtures {
                Some(path) => Backend::Mock(MockScript::from_file(path)?),
                None => Backend::Mock(MockScript::default()),
            },
            BackendKind::Remote => Backend::Remote(remote::RemoteBackend::new(config)?),
        };
        Ok(Gateway {
            backend: Arc::new(backend),
            limit: Arc::new(InFlight::new(config.max_in_flight)),
        })
    }

    /// A gateway answering from scripted fixtures.
    pub fn mock(script: MockScript) -> Self {
        Gateway {
            backend: Arc::new(Backend::Mock(script)),
            limit: Arc::new(InFlight::new(4)),
        }
    }

    pub fn is_mock(&self) -> bool {
        matches!(*self.backend, Backend::Mock(_))
    }

    /// The mock script, when this gateway is mock-backed.
    pub fn mock_script(&self) -> Option<&MockScript> {
        match &*self.backend {
            Backend::Mock(m) => Some(m),
            Backend::Remote(_) => None,
        }
    }

    pub fn chat(&self, request: &ChatRequest) -> Result<ChatResponse> {
        request.validate()?;
        let _permit = self.limit.acquire();
        let response = match &*self.backend {
            Backend::Mock(m) => m.chat(request),
            Backend::Remote(r) => r.chat(request)?,
        };
        if response.text.trim().is_empty() {
            return Err(Error::EmptyResponse);
        }
        Ok(response)
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f32>>> {
        if texts.is_empty() {
            return Err(Error::Validation("no texts to embed".into()));
        }
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(Error::Validation(format!("text {i} is empty")));
        }
        let _permit = self.limit.acquire();
        let vectors = match &*self.backend {
            Backend::Mock(_) => texts.iter().map(|t| mock_embedding(t)).collect(),
            Backend::Remote(r) => r.embed(texts)?,
        };
        if vectors.len() != texts.len() {
            return Err(Error::Transport {
                attempts: 1,
                message: format!("expected {} embeddings, got {}", texts.len(), vectors.len()),
            });
        }
        Ok(vectors)
    }
}

/// One-shot chat through a freshly configured gateway.
pub fn chat(config: &GatewayConfig, request: &ChatRequest) -> Result<ChatResponse> {
    Gateway::from_config(config)?.chat(request)
}

/// One-shot embedding through a freshly configured gateway.
pub fn embed(config: &GatewayConfig, texts: &[String]) -> Result<Vec<EmbeddingVector<f32>>> {
    Gateway::from_config(config)?.embed(texts)
}
