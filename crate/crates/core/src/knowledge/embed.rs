use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use super::KnowledgeError;

pub const DETERMINISTIC_DIMENSION: usize = 256;

/// Text-to-vector provider. Returned vectors are L2-normalized.
pub trait Embedder: Send + Sync {
    /// Identifier recorded in `store.meta.json`; reparsable as an [`EmbedderSpec`].
    fn name(&self) -> String;

    fn embed(&self, text: &str) -> Result<Vec<f64>, KnowledgeError>;
}

/// Lowercase alphanumeric word tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn l2_normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Hashed bag-of-words: each lowercase token adds one count to bucket
/// `fnv1a(token) % dimension`, and the counts are L2-normalized.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DETERMINISTIC_DIMENSION)
    }
}

impl Embedder for HashingEmbedder {
    fn name(&self) -> String {
        if self.dimension == DETERMINISTIC_DIMENSION {
            "deterministic".to_string()
        } else {
            format!("deterministic:{}", self.dimension)
        }
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, KnowledgeError> {
        let mut v = vec![0.0; self.dimension];
        for token in tokenize(text) {
            v[(fnv1a(token.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        l2_normalize(v).ok_or(KnowledgeError::EmptyText)
    }
}

/// Remote sentence-embedding service: `POST {"text": ...}` answered with
/// `{"embedding": [...]}`. The vector is normalized locally.
pub struct HttpEmbedder {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }
}

#[derive(serde::Deserialize)]
struct EmbeddingReply {
    embedding: Vec<f64>,
}

impl Embedder for HttpEmbedder {
    fn name(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, KnowledgeError> {
        if text.trim().is_empty() {
            return Err(KnowledgeError::EmptyText);
        }
        let unavailable =
            |e: String| KnowledgeError::EmbedderUnavailable(format!("{}: {e}", self.endpoint));
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(serde_json::json!({ "text": text }))
            .map_err(|e| unavailable(e.to_string()))?;
        let reply: EmbeddingReply = resp
            .body_mut()
            .read_json()
            .map_err(|e| unavailable(e.to_string()))?;
        l2_normalize(reply.embedding).ok_or(KnowledgeError::ZeroVector)
    }
}

/// `deterministic`, `deterministic:<dim>` or `http:<url>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedderSpec {
    Deterministic(usize),
    Http(String),
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::Deterministic(DETERMINISTIC_DIMENSION)
    }
}

impl FromStr for EmbedderSpec {
    type Err = KnowledgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "deterministic" {
            return Ok(EmbedderSpec::Deterministic(DETERMINISTIC_DIMENSION));
        }
        if let Some(dim) = s.strip_prefix("deterministic:") {
            return dim
                .parse()
                .ok()
                .filter(|d| *d > 0)
                .map(EmbedderSpec::Deterministic)
                .ok_or_else(|| KnowledgeError::InvalidEmbedderSpec(s.to_string()));
        }
        if let Some(url) = s.strip_prefix("http:") {
            let url = if url.starts_with("//") {
                format!("http:{url}")
            } else {
                url.to_string()
            };
            return Ok(EmbedderSpec::Http(url));
        }
        Err(KnowledgeError::InvalidEmbedderSpec(s.to_string()))
    }
}

impl std::fmt::Display for EmbedderSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmbedderSpec::Deterministic(d) if *d == DETERMINISTIC_DIMENSION => {
                f.write_str("deterministic")
            }
            EmbedderSpec::Deterministic(d) => write!(f, "deterministic:{d}"),
            EmbedderSpec::Http(url) => write!(f, "http:{url}"),
        }
    }
}

impl EmbedderSpec {
    pub fn build(&self) -> Arc<dyn Embedder> {
        match self {
            EmbedderSpec::Deterministic(d) => Arc::new(HashingEmbedder::new(*d)),
            EmbedderSpec::Http(url) => Arc::new(HttpEmbedder::new(url.clone())),
        }
    }
}
