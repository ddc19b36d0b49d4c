//! Functional test dataset: ingestion with generated summaries, an
//! embedding index, and category-filtered top-k retrieval.

mod corpus;
mod embed;
pub mod scan;
mod similarity;
mod store;
mod summary;

use std::path::PathBuf;

pub use corpus::{build_store, load_corpus, MANIFEST_FILE};
pub use embed::{
    l2_normalize, tokenize, Embedder, EmbedderSpec, HashingEmbedder, HttpEmbedder,
    DETERMINISTIC_DIMENSION,
};
pub use similarity::cosine_similarity;
pub use store::{
    KnowledgeEntry, KnowledgeStore, RetrievalResult, StoreMeta, ENTRIES_FILE, META_FILE,
};
pub use summary::{
    generate_functional_summary, summary_valid, HeuristicSummarizer, SummaryViolation,
    MAX_SUMMARY_WORDS, SUMMARY_ROUNDS,
};

use crate::llm::LlmError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("vector dimensions differ: {expected} vs {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("embedding has dimension {actual}, store expects {expected}")]
    EmbeddingDimensionMismatch { expected: usize, actual: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("embedding norm {0} is not 1")]
    NotNormalized(f64),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("top_sim must be at least 1")]
    InvalidTopSim,
    #[error("summary rejected after {} rounds: {}", SUMMARY_ROUNDS, .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    SummaryRejected(Vec<SummaryViolation>),
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),
    #[error("invalid embedder spec `{0}`")]
    InvalidEmbedderSpec(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}
