//! HTTP chat-completion / embedding client.

use std::time::Duration;

use base64::Engine as _;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatRequest, ChatResponse, EmbeddingVector, GatewayConfig, RetryPolicy, Usage};
use crate::error::{Error, Result};

/// Where a provider expects requests and how it authenticates them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderProfile {
    pub chat_path: String,
    pub embeddings_path: String,
    pub auth_header: String,
    pub auth_prefix: String,
}

impl Default for ProviderProfile {
    fn default() -> Self {
        ProviderProfile {
            chat_path: "/chat/completions".into(),
            embeddings_path: "/embeddings".into(),
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
        }
    }
}

#[derive(Debug)]
pub(super) struct RemoteBackend {
    client: Client,
    base: String,
    credential: String,
    profile: ProviderProfile,
    chat_model: String,
    vision_model: String,
    embedding_model: String,
    retry: RetryPolicy,
}

enum Failure {
    Transient(String),
    Fatal(Error),
}

impl RemoteBackend {
    pub(super) fn new(config: &GatewayConfig) -> Result<Self> {
        let var = config.credential_env.as_deref().unwrap_or_default();
        let credential = std::env::var(var)
            .ok()
            .filter(|v| !v.trim().is_empty())
            .ok_or_else(|| Error::Config(format!("credential variable {var} is not set")))?;
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .connect_timeout(Duration::from_secs(config.timeout_secs.min(30)))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(RemoteBackend {
            client,
            base: config
                .endpoint
                .clone()
                .unwrap_or_default()
                .trim_end_matches('/')
                .to_owned(),
            credential,
            profile: config.profile.clone(),
            chat_model: config.chat_model.clone(),
            vision_model: config.vision_model.clone(),
            embedding_model: config.embedding_model.clone(),
            retry: config.retry,
        })
    }

    pub(super) fn chat(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let body = self.chat_body(request)?;
        let value = self.post(&self.profile.chat_path, &body)?;
        parse_chat_response(&value)
    }

    pub(super) fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f32>>> {
        let body = json!({ "model": self.embedding_model, "input": texts });
        let value = self.post(&self.profile.embeddings_path, &body)?;
        parse_embedding_response(&value)
    }

    fn chat_body(&self, request: &ChatRequest) -> Result<Value> {
        let mut messages = Vec::with_capacity(request.messages.len());
        for m in &request.messages {
            let content = if m.images.is_empty() {
                Value::String(m.text.clone())
            } else {
                let mut parts = vec![json!({ "type": "text", "text": m.text })];
                for image in &m.images {
                    let (data, media_type) = image.load()?;
                    let encoded = base64::engine::general_purpose::STANDARD.encode(data);
                    parts.push(json!({
                        "type": "image_url",
                        "image_url": { "url": format!("data:{media_type};base64,{encoded}") }
                    }));
                }
                Value::Array(parts)
            };
            messages.push(json!({ "role": m.role.as_str(), "content": content }));
        }
        let model = if request.has_images() {
            &self.vision_model
        } else {
            &self.chat_model
        };
        let mut body = json!({
            "model": model,
            "messages": messages,
            "temperature": request.decoding.temperature,
        });
        if let Some(max) = request.decoding.max_tokens {
            body["max_tokens"] = json!(max);
        }
        Ok(body)
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let url = format!("{}{}", self.base, path);
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.post_once(&url, body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => {
                    log::warn!("attempt {attempt}/{attempts} to {url} failed: {msg}");
                    last = msg;
                    if attempt < attempts {
                        std::thread::sleep(self.retry.backoff(attempt));
                    }
                }
            }
        }
        Err(Error::Transport {
            attempts,
            message: last,
        })
    }

    fn post_once(&self, url: &str, body: &Value) -> std::result::Result<Value, Failure> {
        let response = self
            .client
            .post(url)
            .header(
                self.profile.auth_header.as_str(),
                format!("{}{}", self.profile.auth_prefix, self.credential),
            )
            .json(body)
            .send()
            .map_err(|e| Failure::Transient(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| Failure::Transient(e.to_string()))?;
        if status.is_success() {
            return serde_json::from_str(&text).map_err(|e| {
                Failure::Fatal(Error::Transport {
                    attempts: 1,
                    message: format!("invalid JSON from provider: {e}"),
                })
            });
        }
        let message = format!("HTTP {status}: {}", truncate(&text, 300));
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            Err(Failure::Transient(message))
        } else {
            Err(Failure::Fatal(Error::Transport { attempts: 1, message }))
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn parse_chat_response(value: &Value) -> Result<ChatResponse> {
    let message = &value["choices"][0]["message"];
    if message.get("refusal").is_some_and(|r| !r.is_null()) {
        return Err(Error::EmptyResponse);
    }
    let text = match &message["content"] {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join(""),
        _ => String::new(),
    };
    if text.trim().is_empty() {
        return Err(Error::EmptyResponse);
    }
    let usage = value.get("usage").and_then(|u| {
        Some(Usage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });
    Ok(ChatResponse { text, usage })
}

fn parse_embedding_response(value: &Value) -> Result<Vec<EmbeddingVector<f32>>> {
    let bad = |m: &str| Error::Transport {
        attempts: 1,
        message: format!("malformed embedding response: {m}"),
    };
    let data = value["data"].as_array().ok_or_else(|| bad("missing data"))?;
    let mut rows: Vec<(usize, Vec<f32>)> = Vec::with_capacity(data.len());
    for (pos, item) in data.iter().enumerate() {
        let index = item["index"].as_u64().map(|i| i as usize).unwrap_or(pos);
        let values = item["embedding"]
            .as_array()
            .ok_or_else(|| bad("missing embedding"))?
            .iter()
            .map(|x| x.as_f64().map(|f| f as f32).ok_or_else(|| bad("non-numeric entry")))
            .collect::<Result<Vec<f32>>>()?;
        rows.push((index, values));
    }
    rows.sort_by_key(|(i, _)| *i);
    let dim = rows.first().map(|(_, v)| v.len());
    if rows.iter().any(|(_, v)| Some(v.len()) != dim) {
        return Err(bad("inconsistent dimensions"));
    }
    rows.into_iter().map(|(_, v)| EmbeddingVector::new(v)).collect()
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    use super::*;
    use crate::gateway::{BackendKind, Gateway, ImageRef};

    /// Serves one scripted (status, body) per connection and forwards each
    /// raw request to the returned channel.
    fn serve(script: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (status, body) in script {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut head = String::new();
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap();
                    }
                    head.push_str(&line);
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut buf = vec![0u8; content_length];
                reader.read_exact(&mut buf).unwrap();
                head.push_str(&String::from_utf8_lossy(&buf));
                tx.send(head).unwrap();
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1"), rx)
    }

    fn config(endpoint: String, var: &str) -> GatewayConfig {
        std::env::set_var(var, "sk-test");
        GatewayConfig {
            backend: BackendKind::Remote,
            endpoint: Some(endpoint),
            credential_env: Some(var.into()),
            retry: RetryPolicy {
                max_attempts: 3,
                backoff_base_ms: 1,
            },
            timeout_secs: 5,
            ..GatewayConfig::default()
        }
    }

    const OK_CHAT: &str = r#"{"choices":[{"message":{"role":"assistant","content":"hello there"}}],"usage":{"prompt_tokens":7,"completion_tokens":2}}"#;

    #[test]
    fn chat_wire_format_and_retry_on_server_error() {
        let (url, rx) = serve(vec![(503, "{}".into()), (200, OK_CHAT.into())]);
        let gw = Gateway::from_config(&config(url, "ARTCTX_TEST_KEY_A")).unwrap();
        let req = ChatRequest::new().system("sys").user_with_images(
            "look",
            vec![ImageRef::Bytes {
                data: vec![1, 2, 3],
                media_type: "image/png".into(),
            }],
        );
        let resp = gw.chat(&req).unwrap();
        assert_eq!(resp.text, "hello there");
        assert_eq!(
            resp.usage,
            Some(Usage {
                prompt_tokens: 7,
                completion_tokens: 2
            })
        );
        let _first = rx.recv().unwrap();
        let second = rx.recv().unwrap();
        assert!(second.starts_with("POST /v1/chat/completions"));
        assert!(second.to_ascii_lowercase().contains("authorization: bearer sk-test"));
        let body: Value = serde_json::from_str(&second[second.find("\r\n\r\n").unwrap() + 4..]).unwrap();
        assert_eq!(body["temperature"], json!(0.0));
        assert_eq!(body["messages"][0]["content"], json!("sys"));
        assert_eq!(
            body["messages"][1]["content"][1]["image_url"]["url"],
            json!("data:image/png;base64,AQID")
        );
    }

    #[test]
    fn exhausted_retries_are_transport_errors() {
        let (url, _rx) = serve(vec![(500, "{}".into()), (502, "{}".into()), (503, "{}".into())]);
        let gw = Gateway::from_config(&config(url, "ARTCTX_TEST_KEY_B")).unwrap();
        match gw.chat(&ChatRequest::new().user("x")) {
            Err(Error::Transport { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected transport error, got {other:?}"),
        }
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, rx) = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
        let gw = Gateway::from_config(&config(url, "ARTCTX_TEST_KEY_C")).unwrap();
        assert!(matches!(
            gw.chat(&ChatRequest::new().user("x")),
            Err(Error::Transport { .. })
        ));
        rx.recv().unwrap();
        assert!(rx.try_recv().is_err());
    }

    #[test]
    fn empty_content_is_empty_response() {
        let (url, _rx) = serve(vec![(200, r#"{"choices":[{"message":{"content":""}}]}"#.into())]);
        let gw = Gateway::from_config(&config(url, "ARTCTX_TEST_KEY_D")).unwrap();
        assert!(matches!(
            gw.chat(&ChatRequest::new().user("x")),
            Err(Error::EmptyResponse)
        ));
    }

    #[test]
    fn embeddings_are_reordered_by_index() {
        let body = r#"{"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]}"#;
        let (url, rx) = serve(vec![(200, body.into())]);
        let gw = Gateway::from_config(&config(url, "ARTCTX_TEST_KEY_E")).unwrap();
        let v = gw.embed(&["a".into(), "b".into()]).unwrap();
        assert_eq!(v[0].values(), &[1.0, 0.0]);
        assert_eq!(v[1].values(), &[0.0, 1.0]);
        assert!(rx.recv().unwrap().starts_with("POST /v1/embeddings"));
    }

    #[test]
    fn inconsistent_embedding_dims_rejected() {
        let value = json!({"data":[{"embedding":[1.0]},{"embedding":[1.0, 2.0]}]});
        assert!(parse_embedding_response(&value).is_err());
    }
}
