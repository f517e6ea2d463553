//! Sentence embedding providers.
//!
//! The matcher only needs a deterministic text-to-vector function. Three
//! providers ship here: a character-trigram hashing embedder (no model
//! weights, fully reproducible), a lookup table of precomputed vectors, and an
//! HTTP client for an external embedding service.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Dimension of every vector produced by the bundled providers.
pub const EMBEDDING_DIM: usize = 384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    components: Vec<f64>,
    normalized: bool,
}

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self {
            components,
            normalized: false,
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// L2-normalized copy; `None` for a zero (or non-finite) vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(Self {
            components: self.components.iter().map(|x| x / n).collect(),
            normalized: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("embedding provider unavailable: {0}")]
    Unavailable(String),
    #[error("embedding provider returned an invalid vector: {0}")]
    InvalidVector(String),
}

pub trait EmbeddingProvider: Send + Sync {
    /// Returns an L2-normalized vector of dimension [`EMBEDDING_DIM`].
    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError>;

    fn name(&self) -> &str;
}

/// Convenience wrapper matching the operation name used throughout the crate.
pub fn embed(provider: &dyn EmbeddingProvider, text: &str) -> Result<EmbeddingVector, ProviderError> {
    provider.embed(text)
}

fn checked(components: Vec<f64>) -> Result<EmbeddingVector, ProviderError> {
    if components.len() != EMBEDDING_DIM {
        return Err(ProviderError::InvalidVector(format!(
            "expected {EMBEDDING_DIM} components, got {}",
            components.len()
        )));
    }
    EmbeddingVector::new(components)
        .normalized()
        .ok_or_else(|| ProviderError::InvalidVector("zero or non-finite vector".into()))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Signed feature hashing of character trigrams (with boundary markers) into
/// [`EMBEDDING_DIM`] buckets.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashEmbedding;

impl HashEmbedding {
    fn raw(text: &str) -> Vec<f64> {
        let padded: Vec<char> = std::iter::once('^').chain(text.chars()).chain(std::iter::once('$')).collect();
        let mut v = vec![0.0; EMBEDDING_DIM];
        let mut add = |gram: &[char]| {
            let s: String = gram.iter().collect();
            let h = fnv1a(s.as_bytes());
            let idx = (h % EMBEDDING_DIM as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        };
        if padded.len() < 3 {
            add(&padded);
        } else {
            for w in padded.windows(3) {
                add(w);
            }
        }
        v
    }
}

impl EmbeddingProvider for HashEmbedding {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        let mut v = Self::raw(text);
        if v.iter().all(|x| *x == 0.0) {
            // Every trigram cancelled out; fall back to a text-keyed basis vector.
            v[(fnv1a(text.as_bytes()) % EMBEDDING_DIM as u64) as usize] = 1.0;
        }
        checked(v)
    }

    fn name(&self) -> &str {
        "hash"
    }
}

#[derive(Debug, Deserialize)]
struct TableRecord {
    text: String,
    vector: Vec<f64>,
}

/// Precomputed vectors keyed by exact text; one `{text, vector}` JSON object
/// per line.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedding {
    table: HashMap<String, EmbeddingVector>,
}

#[derive(Debug, thiserror::Error)]
pub enum TableLoadError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

impl TableEmbedding {
    pub fn parse(source: &str) -> Result<Self, TableLoadError> {
        let mut table = HashMap::new();
        for (i, line) in source.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: TableRecord = serde_json::from_str(line).map_err(|e| TableLoadError::Record {
                line: i + 1,
                message: e.to_string(),
            })?;
            let v = checked(rec.vector).map_err(|e| TableLoadError::Record {
                line: i + 1,
                message: e.to_string(),
            })?;
            table.insert(rec.text, v);
        }
        Ok(Self { table })
    }

    pub fn load(path: &Path) -> Result<Self, TableLoadError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EmbeddingProvider for TableEmbedding {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| ProviderError::Unavailable(format!("no vector for `{text}` in table")))
    }

    fn name(&self) -> &str {
        "table"
    }
}

/// Client for an embedding service: `POST {"text": ..}` answered by
/// `{"vector": [..]}`.
pub struct HttpEmbedding {
    url: String,
    agent: ureq::Agent,
}

impl HttpEmbedding {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { url: url.into(), agent }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

impl EmbeddingProvider for HttpEmbedding {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        let resp = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { text })
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let body: EmbedResponse = resp
            .into_body()
            .read_json()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        checked(body.vector)
    }

    fn name(&self) -> &str {
        "http"
    }
}
