//! Art context knowledge-graph pipeline: build a typed graph from a text
//! corpus, retrieve a painting-specific subgraph, and generate explanations
//! through a provider-agnostic (or mock) model gateway.

pub mod config;
pub mod construct;
pub mod error;
pub mod gateway;
pub mod generate;
pub mod graph;
pub mod index;
pub mod metrics;
pub mod pipeline;
pub mod prompts;
pub mod retriever;
pub mod scalar;

pub use error::{Error, Result, Stage};
pub use scalar::Scalar;

/// Embedding vector as returned by the gateway.
pub type Embedding = gateway::EmbeddingVector<f32>;
/// Node vector index as built and persisted by the pipeline.
pub type Index = index::VectorIndex<f32>;
/// Candidate scores as computed during retrieval.
pub type Scored = retriever::ScoredNode<f64>;
/// Retrieved context subgraph.
pub type Subgraph = retriever::ContextSubgraph<f64>;
