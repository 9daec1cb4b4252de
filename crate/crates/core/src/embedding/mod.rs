//! Dense embeddings for tool documents and queries.
//!
//! Three interchangeable providers sit behind [`Embedder`]:
//! [`HashEmbedder`] (deterministic, offline), [`CachedEmbedder`] (file-backed
//! cache, optionally filling misses from another provider) and
//! [`RemoteEmbedder`] (HTTP embeddings API).

mod cache;
mod hash;
mod remote;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

pub use cache::{CacheKey, EmbeddingCache};
pub use hash::{HashEmbedder, DEFAULT_DIMENSION};
pub use remote::{RemoteEmbedder, EMBEDDING_API_KEY_ENV, EMBEDDING_MODEL_ENV, EMBEDDING_URL_ENV};

use crate::graph::ToolNode;
use crate::http::UreqTransport;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("invalid embedding: {0}")]
    InvalidVector(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("embedding request failed (status {status:?}, retry after {retry_after:?}): {message}")]
    Transport {
        status: Option<u16>,
        retry_after: Option<Duration>,
        message: String,
    },
    #[error("malformed embedding response: {0}")]
    BadResponse(String),
    #[error("embedding cache miss for key {0}")]
    CacheMiss(String),
    #[error("corrupt embedding cache: {0}")]
    CorruptCache(String),
    #[error("missing environment variable {0}")]
    MissingEnv(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A finite, non-empty dense vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::InvalidVector("dimension must be > 0".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidVector(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The text that gets embedded for one tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolDocument {
    pub tool_id: String,
    pub text: String,
}

/// `name \n description \n Parameters: p1, p2, ...`
pub fn render_tool_document(tool: &ToolNode) -> ToolDocument {
    let params: Vec<&str> = tool.parameters.iter().map(|p| p.name.as_str()).collect();
    ToolDocument {
        tool_id: tool.id.clone(),
        text: format!(
            "{}\n{}\nParameters: {}",
            tool.name,
            tool.description,
            params.join(", ")
        ),
    }
}

pub trait Embedder: Send + Sync {
    /// Provider family, part of the cache key.
    fn provider(&self) -> &str;
    /// Model name, part of the cache key.
    fn model(&self) -> &str;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;
}

impl<E: Embedder + ?Sized> Embedder for Arc<E> {
    fn provider(&self) -> &str {
        (**self).provider()
    }
    fn model(&self) -> &str {
        (**self).model()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed(text)
    }
}

/// Looks up vectors in a cache; misses go to `fallback` (and are written
/// back) or fail with [`EmbedError::CacheMiss`] when there is none.
pub struct CachedEmbedder {
    cache: Arc<EmbeddingCache>,
    provider: String,
    model: String,
    fallback: Option<Arc<dyn Embedder>>,
}

impl CachedEmbedder {
    /// Cache in front of `inner`, keyed under the inner provider's namespace.
    pub fn wrap(cache: Arc<EmbeddingCache>, inner: Arc<dyn Embedder>) -> Self {
        Self {
            provider: inner.provider().to_string(),
            model: inner.model().to_string(),
            cache,
            fallback: Some(inner),
        }
    }

    /// Offline cache: serves only what is already stored under
    /// `(provider, model)`.
    pub fn offline(cache: Arc<EmbeddingCache>, provider: &str, model: &str) -> Self {
        Self {
            cache,
            provider: provider.to_string(),
            model: model.to_string(),
            fallback: None,
        }
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }
}

impl Embedder for CachedEmbedder {
    fn provider(&self) -> &str {
        &self.provider
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let key = CacheKey::new(&self.provider, &self.model, text);
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        match &self.fallback {
            Some(inner) => {
                let v = inner.embed(text)?;
                self.cache.insert(key, &v)?;
                Ok(v)
            }
            None => Err(EmbedError::CacheMiss(key.to_hex())),
        }
    }
}

/// Declarative provider selection, turned into an [`Embedder`] by
/// [`ProviderConfig::build`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProviderConfig {
    Hash {
        dimension: usize,
        cache_path: Option<PathBuf>,
    },
    /// Offline: every text must already be in the cache.
    Cache {
        path: PathBuf,
        provider: String,
        model: String,
    },
    Remote {
        endpoint: String,
        api_key: Option<String>,
        model: String,
        timeout: Duration,
        cache_path: Option<PathBuf>,
    },
}

impl ProviderConfig {
    /// Remote provider configured from `TOOLGRAPH_EMBEDDING_URL`,
    /// `TOOLGRAPH_EMBEDDING_API_KEY` and `TOOLGRAPH_EMBEDDING_MODEL`.
    pub fn remote_from_env(
        timeout: Duration,
        cache_path: Option<PathBuf>,
    ) -> Result<Self, EmbedError> {
        let endpoint =
            std::env::var(EMBEDDING_URL_ENV).map_err(|_| EmbedError::MissingEnv(EMBEDDING_URL_ENV))?;
        let model = std::env::var(EMBEDDING_MODEL_ENV)
            .map_err(|_| EmbedError::MissingEnv(EMBEDDING_MODEL_ENV))?;
        Ok(ProviderConfig::Remote {
            endpoint,
            api_key: std::env::var(EMBEDDING_API_KEY_ENV).ok(),
            model,
            timeout,
            cache_path,
        })
    }

    pub fn build(&self) -> Result<Arc<dyn Embedder>, EmbedError> {
        Ok(match self {
            ProviderConfig::Hash {
                dimension,
                cache_path,
            } => {
                let inner: Arc<dyn Embedder> = Arc::new(HashEmbedder::new(*dimension)?);
                match cache_path {
                    Some(p) => Arc::new(CachedEmbedder::wrap(
                        Arc::new(EmbeddingCache::open(p)?),
                        inner,
                    )),
                    None => inner,
                }
            }
            ProviderConfig::Cache {
                path,
                provider,
                model,
            } => Arc::new(CachedEmbedder::offline(
                Arc::new(EmbeddingCache::open(path)?),
                provider,
                model,
            )),
            ProviderConfig::Remote {
                endpoint,
                api_key,
                model,
                timeout,
                cache_path,
            } => {
                let inner: Arc<dyn Embedder> = Arc::new(RemoteEmbedder::new(
                    Arc::new(UreqTransport::new()),
                    endpoint.clone(),
                    api_key.clone(),
                    model.clone(),
                    *timeout,
                ));
                match cache_path {
                    Some(p) => Arc::new(CachedEmbedder::wrap(
                        Arc::new(EmbeddingCache::open(p)?),
                        inner,
                    )),
                    None => inner,
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ToolKind, ToolParameter};

    fn tool(name: &str, description: &str, params: &[&str]) -> ToolNode {
        ToolNode {
            id: name.into(),
            name: name.into(),
            description: description.into(),
            kind: ToolKind::Regular,
            parameters: params
                .iter()
                .map(|p| ToolParameter {
                    name: p.to_string(),
                    description: String::new(),
                    value_kind: "string".into(),
                    required: true,
                })
                .collect(),
        }
    }

    #[test]
    fn document_template() {
        let doc = render_tool_document(&tool("get_current_date", "Returns today's date.", &[]));
        assert_eq!(doc.text, "get_current_date\nReturns today's date.\nParameters: ");
        assert!(doc.text.ends_with("Parameters: "));

        let doc = render_tool_document(&tool(
            "get_current_stock_price",
            "Latest price.",
            &["ticker", "exchange"],
        ));
        assert!(doc.text.contains("get_current_stock_price"));
        assert!(doc.text.contains("ticker"));
        assert!(doc.text.ends_with("Parameters: ticker, exchange"));
    }

    #[test]
    fn description_changes_text() {
        let a = render_tool_document(&tool("t", "one", &[]));
        let b = render_tool_document(&tool("t", "two", &[]));
        assert_ne!(a.text, b.text);
    }

    #[test]
    fn vector_rejects_bad_values() {
        assert!(EmbeddingVector::new(vec![]).is_err());
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(EmbeddingVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(EmbeddingVector::new(vec![3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn offline_cache_misses_explicitly() {
        let cache = Arc::new(EmbeddingCache::in_memory());
        let e = CachedEmbedder::offline(cache, "hash", "token-hash-8");
        assert!(matches!(e.embed("hello"), Err(EmbedError::CacheMiss(_))));
    }

    #[test]
    fn wrapped_cache_fills_and_serves() {
        let cache = Arc::new(EmbeddingCache::in_memory());
        let inner: Arc<dyn Embedder> = Arc::new(HashEmbedder::new(16).unwrap());
        let e = CachedEmbedder::wrap(cache.clone(), inner.clone());
        let v = e.embed("stock price").unwrap();
        assert_eq!(cache.len(), 1);
        // an offline view over the same cache now hits
        let off = CachedEmbedder::offline(cache, inner.provider(), inner.model());
        assert_eq!(off.embed("stock price").unwrap(), v);
    }
}
