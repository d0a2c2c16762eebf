//! HTTP service. Handlers only read the shared [`Pipeline`]; blocking
//! gateway calls run on tokio's blocking pool.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::Context;
use artctx_core::config::AppConfig;
use artctx_core::gateway::ImageRef;
use artctx_core::graph::{ChunkRef, NodeId};
use artctx_core::pipeline::{to_json, Pipeline, QueryOverrides};
use artctx_core::retriever::PaintingQuery;
use artctx_core::Error;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

/// Body of `POST /explain` and `POST /retrieve`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBody {
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub image_base64: Option<String>,
    pub question: Option<String>,
    #[serde(default)]
    pub overrides: QueryOverrides,
}

impl QueryBody {
    pub fn painting(&self) -> Result<PaintingQuery, ApiError> {
        let mut painting = PaintingQuery::from_attributes(self.attributes.clone());
        if let Some(b64) = &self.image_base64 {
            let data = base64::engine::general_purpose::STANDARD
                .decode(b64.trim())
                .map_err(|e| ApiError::bad_request(format!("image_base64: {e}")))?;
            painting = painting.with_image(ImageRef::from_bytes(data));
        }
        if let Some(q) = &self.question {
            painting = painting.with_question(q.clone());
        }
        painting.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(painting)
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: message,
                stage: None,
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Transport { .. } | Error::EmptyResponse | Error::ConceptDetection(_) => StatusCode::BAD_GATEWAY,
            Error::Validation(_) | Error::Config(_) => StatusCode::BAD_REQUEST,
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            body: ErrorBody {
                error: e.to_string(),
                stage: e.stage().map(|s| s.to_string()),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(
            self.status,
            serde_json::to_string(&self.body).unwrap_or_default() + "\n",
        )
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn ok_json<T: Serialize>(value: &T) -> Result<Response, ApiError> {
    Ok(json_response(StatusCode::OK, to_json(value)?))
}

/// Parses the body by hand so every malformed body, including an empty
/// one, is a 400 with serde's field diagnostics.
fn parse_body(body: &[u8]) -> Result<QueryBody, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn run_blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, Error> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody {
                error: format!("worker failed: {e}"),
                stage: None,
            },
        }),
    }
}

async fn retrieve(State(p): State<Arc<Pipeline>>, body: Bytes) -> Result<Response, ApiError> {
    let req = parse_body(&body)?;
    let painting = req.painting()?;
    let sub = run_blocking(move || p.retrieve(&painting, &req.overrides)).await?;
    ok_json(&sub)
}

async fn explain(State(p): State<Arc<Pipeline>>, body: Bytes) -> Result<Response, ApiError> {
    let req = parse_body(&body)?;
    let painting = req.painting()?;
    let result = run_blocking(move || p.explain(&painting, &req.overrides)).await?;
    ok_json(&result)
}

#[derive(Debug, Serialize)]
struct Neighbor<'a> {
    id: &'a NodeId,
    name: &'a str,
    #[serde(rename = "type")]
    node_type: &'a str,
    relation: &'a str,
}

#[derive(Debug, Serialize)]
struct NodeView<'a> {
    id: &'a NodeId,
    name: &'a str,
    #[serde(rename = "type")]
    node_type: &'a str,
    description: &'a str,
    provenance: Vec<&'a ChunkRef>,
    neighbors: Vec<Neighbor<'a>>,
}

async fn node(State(p): State<Arc<Pipeline>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = NodeId::new(id);
    let g = &p.graph;
    let node = g
        .node(&id)
        .ok_or_else(|| ApiError::from(Error::NotFound(format!("node {id}"))))?;
    let neighbors = g
        .neighbors(&id)?
        .iter()
        .filter_map(|n| {
            let other = g.node(n)?;
            Some(Neighbor {
                id: &other.id,
                name: &other.name,
                node_type: other.type_label(),
                relation: g.edge(&id, n).map(|e| e.description.as_str()).unwrap_or(""),
            })
        })
        .collect();
    ok_json(&NodeView {
        id: &node.id,
        name: &node.name,
        node_type: node.type_label(),
        description: &node.description,
        provenance: node.provenance.iter().collect(),
        neighbors,
    })
}

async fn healthz(State(p): State<Arc<Pipeline>>) -> Result<Response, ApiError> {
    let mut body: BTreeMap<&str, serde_json::Value> = p.counts().into_iter().map(|(k, v)| (k, v.into())).collect();
    body.insert("status", "ok".into());
    ok_json(&body)
}

pub fn router(pipeline: Arc<Pipeline>) -> Router {
    Router::new()
        .route("/explain", post(explain))
        .route("/retrieve", post(retrieve))
        .route("/graph/nodes/{id}", get(node))
        .route("/healthz", get(healthz))
        .with_state(pipeline)
}

pub async fn serve(pipeline: Arc<Pipeline>, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .with_context(|| format!("binding {bind}"))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(pipeline)).await?;
    Ok(())
}

pub fn serve_blocking(config: &AppConfig) -> anyhow::Result<()> {
    let pipeline = Arc::new(Pipeline::from_config(config)?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(serve(pipeline, &config.service.bind))
}
