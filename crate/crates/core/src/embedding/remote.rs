use std::sync::{Arc, OnceLock};
use std::time::Duration;

use serde_json::{json, Value};

use super::{EmbedError, Embedder, EmbeddingVector};
use crate::http::{HttpRequest, HttpTransport, TransportError};

pub const EMBEDDING_URL_ENV: &str = "TOOLGRAPH_EMBEDDING_URL";
pub const EMBEDDING_API_KEY_ENV: &str = "TOOLGRAPH_EMBEDDING_API_KEY";
pub const EMBEDDING_MODEL_ENV: &str = "TOOLGRAPH_EMBEDDING_MODEL";

/// Client for an embeddings endpoint taking `{"input": text, "model": ...}`.
///
/// Accepts `{"data": [{"embedding": [...]}]}`, `{"embedding": [...]}` or
/// `{"vector": [...]}` responses. The first vector fixes the dimension; later
/// responses of another size are rejected.
pub struct RemoteEmbedder {
    transport: Arc<dyn HttpTransport>,
    endpoint: String,
    api_key: Option<String>,
    model: String,
    timeout: Duration,
    dimension: OnceLock<usize>,
}

impl RemoteEmbedder {
    pub fn new(
        transport: Arc<dyn HttpTransport>,
        endpoint: String,
        api_key: Option<String>,
        model: String,
        timeout: Duration,
    ) -> Self {
        Self {
            transport,
            endpoint,
            api_key,
            model,
            timeout,
            dimension: OnceLock::new(),
        }
    }
}

fn vector_field(body: &Value) -> Option<&Vec<Value>> {
    body.pointer("/data/0/embedding")
        .or_else(|| body.get("embedding"))
        .or_else(|| body.get("vector"))
        .and_then(Value::as_array)
}

impl Embedder for RemoteEmbedder {
    fn provider(&self) -> &str {
        "remote"
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let req = HttpRequest {
            url: self.endpoint.clone(),
            headers,
            body: json!({ "input": text, "model": self.model }),
            timeout: self.timeout,
        };
        let resp = self.transport.post_json(&req).map_err(|e| EmbedError::Transport {
            status: None,
            retry_after: None,
            message: match e {
                TransportError::Timeout => format!("timed out after {:?}", self.timeout),
                other => other.to_string(),
            },
        })?;
        if !resp.is_success() {
            return Err(EmbedError::Transport {
                status: Some(resp.status),
                retry_after: resp.retry_after(),
                message: resp.body.chars().take(200).collect(),
            });
        }
        let body: Value =
            serde_json::from_str(&resp.body).map_err(|e| EmbedError::BadResponse(e.to_string()))?;
        let raw = vector_field(&body)
            .ok_or_else(|| EmbedError::BadResponse("no embedding array in response".into()))?;
        let values = raw
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| EmbedError::BadResponse(format!("non-numeric component {v}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let v = EmbeddingVector::new(values)?;
        let expected = *self.dimension.get_or_init(|| v.dimension());
        if v.dimension() != expected {
            return Err(EmbedError::DimensionMismatch {
                expected,
                actual: v.dimension(),
            });
        }
        Ok(v)
    }
}
