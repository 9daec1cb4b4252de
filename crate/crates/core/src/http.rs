//! Minimal synchronous JSON-over-HTTP transport shared by the remote
//! embedding and reranking clients. Tests substitute their own transport.

use std::time::Duration;

#[derive(Debug, Clone)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: serde_json::Value,
    pub timeout: Duration,
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl HttpResponse {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// `Retry-After` in seconds, if the server sent one.
    pub fn retry_after(&self) -> Option<Duration> {
        self.header("retry-after")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s >= 0.0)
            .map(Duration::from_secs_f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connection(String),
}

pub trait HttpTransport: Send + Sync {
    /// Sends `req.body` as JSON via POST. Non-2xx responses are returned as
    /// `Ok`; only network-level failures are errors.
    fn post_json(&self, req: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new() -> Self {
        Self {
            agent: ureq::AgentBuilder::new().build(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpTransport for UreqTransport {
    fn post_json(&self, req: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let mut call = self.agent.post(&req.url).timeout(req.timeout);
        for (k, v) in &req.headers {
            call = call.set(k, v);
        }
        let response = match call.send_json(&req.body) {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(ureq::Error::Transport(t)) => {
                let msg = t.to_string();
                return Err(if msg.contains("timed out") {
                    TransportError::Timeout
                } else {
                    TransportError::Connection(msg)
                });
            }
        };
        let status = response.status();
        let headers = response
            .headers_names()
            .into_iter()
            .filter_map(|name| {
                let value = response.header(&name)?.to_string();
                Some((name, value))
            })
            .collect();
        let body = response
            .into_string()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retry_after_seconds() {
        let r = HttpResponse {
            status: 429,
            headers: vec![("Retry-After".into(), "7".into())],
            body: String::new(),
        };
        assert_eq!(r.retry_after(), Some(Duration::from_secs(7)));
        assert!(!r.is_success());
    }

    #[test]
    fn unreachable_host_is_transport_error() {
        let t = UreqTransport::new();
        let req = HttpRequest {
            url: "http://127.0.0.1:9/embeddings".into(),
            headers: vec![],
            body: serde_json::json!({"input": "x"}),
            timeout: Duration::from_millis(500),
        };
        assert!(t.post_json(&req).is_err());
    }
}
