//! Rerank hooks for the first-pass candidates.
//!
//! A reranker returns a permutation: candidates are never added or dropped.
//! The LLM reranker repairs partial answers by appending whatever the model
//! left out in original order, and degrades to identity order (with a flag)
//! when the endpoint fails.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::RetrievalError;
use crate::graph::ToolNode;
use crate::http::{HttpRequest, HttpTransport, UreqTransport};

pub const RERANKER_URL_ENV: &str = "TOOLGRAPH_RERANKER_URL";
pub const RERANKER_API_KEY_ENV: &str = "TOOLGRAPH_RERANKER_API_KEY";
pub const RERANKER_MODEL_ENV: &str = "TOOLGRAPH_RERANKER_MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RerankerKind {
    Identity,
    /// Moves golden tools to the front; needs labels, so evaluation only.
    Oracle,
    Remote,
}

impl FromStr for RerankerKind {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(RerankerKind::Identity),
            "oracle" => Ok(RerankerKind::Oracle),
            "remote" | "llm" => Ok(RerankerKind::Remote),
            other => Err(RetrievalError::Config(format!(
                "unknown reranker `{other}` (expected identity, oracle or remote)"
            ))),
        }
    }
}

impl fmt::Display for RerankerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RerankerKind::Identity => "identity",
            RerankerKind::Oracle => "oracle",
            RerankerKind::Remote => "remote",
        })
    }
}

/// Per-query side information for hooks.
#[derive(Debug, Clone, Copy, Default)]
pub struct QueryContext<'a> {
    pub golden: Option<&'a HashSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerankOutcome {
    /// Permutation of candidate indices, best first.
    pub order: Vec<usize>,
    /// Set when the hook failed and identity order was used.
    pub fallback: bool,
}

impl RerankOutcome {
    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            fallback: false,
        }
    }
}

pub trait Reranker: Send + Sync {
    fn rerank(
        &self,
        query: &str,
        candidates: &[&ToolNode],
        ctx: &QueryContext<'_>,
    ) -> Result<RerankOutcome, RetrievalError>;
}

pub struct IdentityReranker;

impl Reranker for IdentityReranker {
    fn rerank(
        &self,
        _query: &str,
        candidates: &[&ToolNode],
        _ctx: &QueryContext<'_>,
    ) -> Result<RerankOutcome, RetrievalError> {
        Ok(RerankOutcome::identity(candidates.len()))
    }
}

/// Stable partition: golden candidates first, each group in input order.
pub struct OracleReranker;

impl Reranker for OracleReranker {
    fn rerank(
        &self,
        _query: &str,
        candidates: &[&ToolNode],
        ctx: &QueryContext<'_>,
    ) -> Result<RerankOutcome, RetrievalError> {
        let golden = ctx.golden.ok_or_else(|| {
            RetrievalError::Config("oracle reranker needs golden labels".into())
        })?;
        let (mut order, rest): (Vec<usize>, Vec<usize>) =
            (0..candidates.len()).partition(|&i| golden.contains(&candidates[i].id));
        order.extend(rest);
        Ok(RerankOutcome {
            order,
            fallback: false,
        })
    }
}

/// Prompt asking the model to reorder the candidate names by relevance.
/// Query and candidates are embedded as JSON so any characters in names or
/// descriptions survive verbatim.
pub fn build_reranker_prompt(query: &str, candidates: &[&ToolNode]) -> String {
    let listing: Vec<Value> = candidates
        .iter()
        .map(|t| json!({ "name": t.name, "description": t.description }))
        .collect();
    let query_json = Value::String(query.to_string());
    let listing_json = serde_json::to_string_pretty(&listing).expect("json values serialize");
    format!(
        "You rerank tools for an AI agent. The tools below were retrieved by vector search \
         for the user query. Reorder them from most to least relevant for answering the query, \
         so the single most relevant tool comes first.\n\n\
         User query (JSON string):\n{query_json}\n\n\
         Candidate tools ({n}):\n{listing_json}\n\n\
         Return only a JSON object of the form {{\"tool_names\": [\"...\"]}} that lists every \
         candidate name exactly once, most relevant first. Use names exactly as given and do \
         not add tools that are not in the list.",
        n = candidates.len(),
    )
}

/// JSON schema for the structured answer: an array drawn from the candidate names.
pub fn reranker_response_schema(candidates: &[&ToolNode]) -> Value {
    let names: Vec<&str> = candidates.iter().map(|t| t.name.as_str()).collect();
    json!({
        "type": "object",
        "properties": {
            "tool_names": {
                "type": "array",
                "items": { "type": "string", "enum": names }
            }
        },
        "required": ["tool_names"],
        "additionalProperties": false
    })
}

fn extract_json(text: &str) -> Option<Value> {
    let trimmed = text.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Some(v);
    }
    let unfenced = trimmed
        .trim_start_matches("```json")
        .trim_start_matches("```")
        .trim_end_matches("```")
        .trim();
    if let Ok(v) = serde_json::from_str(unfenced) {
        return Some(v);
    }
    for (open, close) in [('{', '}'), ('[', ']')] {
        if let (Some(a), Some(b)) = (trimmed.find(open), trimmed.rfind(close)) {
            if a < b {
                if let Ok(v) = serde_json::from_str(&trimmed[a..=b]) {
                    return Some(v);
                }
            }
        }
    }
    None
}

/// Parses a model answer into a full permutation of `candidates`.
///
/// Returns the order and whether it had to be repaired (unknown names,
/// duplicates or omissions). `None` when no name list can be found at all.
pub fn parse_reranker_response(text: &str, candidates: &[&ToolNode]) -> Option<(Vec<usize>, bool)> {
    let value = extract_json(text)?;
    let names = match &value {
        Value::Array(a) => a,
        Value::Object(o) => match o.get("tool_names") {
            Some(Value::Array(a)) => a,
            _ => o.values().find_map(Value::as_array)?,
        },
        _ => return None,
    };
    let mut order = Vec::with_capacity(candidates.len());
    let mut used = vec![false; candidates.len()];
    let mut repaired = false;
    for name in names {
        let Some(name) = name.as_str() else {
            repaired = true;
            continue;
        };
        let hit = candidates
            .iter()
            .position(|t| t.name == name)
            .or_else(|| {
                let n = name.trim();
                candidates
                    .iter()
                    .position(|t| t.name.trim().eq_ignore_ascii_case(n) || t.id == n)
            });
        match hit {
            Some(i) if !used[i] => {
                used[i] = true;
                order.push(i);
            }
            _ => repaired = true,
        }
    }
    for (i, u) in used.iter().enumerate() {
        if !u {
            order.push(i);
            repaired = true;
        }
    }
    Some((order, repaired))
}

/// Counting semaphore capping in-flight remote calls.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Chat-completions client that asks an LLM to reorder candidates.
pub struct LlmReranker {
    transport: Arc<dyn HttpTransport>,
    endpoint: String,
    api_key: Option<String>,
    model: String,
    timeout: Duration,
    gate: Gate,
}

impl LlmReranker {
    pub fn new(
        transport: Arc<dyn HttpTransport>,
        endpoint: String,
        api_key: Option<String>,
        model: String,
        timeout: Duration,
        max_concurrent: usize,
    ) -> Self {
        Self {
            transport,
            endpoint,
            api_key,
            model,
            timeout,
            gate: Gate::new(max_concurrent),
        }
    }

    /// Client configured from `TOOLGRAPH_RERANKER_URL`,
    /// `TOOLGRAPH_RERANKER_API_KEY` and `TOOLGRAPH_RERANKER_MODEL`.
    pub fn from_env(timeout: Duration, max_concurrent: usize) -> Result<Self, RetrievalError> {
        let var = |name: &str| {
            std::env::var(name)
                .map_err(|_| RetrievalError::Config(format!("missing environment variable {name}")))
        };
        Ok(Self::new(
            Arc::new(UreqTransport::new()),
            var(RERANKER_URL_ENV)?,
            std::env::var(RERANKER_API_KEY_ENV).ok(),
            var(RERANKER_MODEL_ENV)?,
            timeout,
            max_concurrent,
        ))
    }

    pub fn request_body(&self, query: &str, candidates: &[&ToolNode]) -> Value {
        json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                { "role": "user", "content": build_reranker_prompt(query, candidates) }
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": "reranked_tools",
                    "strict": true,
                    "schema": reranker_response_schema(candidates)
                }
            }
        })
    }

    fn call(&self, query: &str, candidates: &[&ToolNode]) -> Option<(Vec<usize>, bool)> {
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let req = HttpRequest {
            url: self.endpoint.clone(),
            headers,
            body: self.request_body(query, candidates),
            timeout: self.timeout,
        };
        let resp = {
            let _slot = self.gate.acquire();
            self.transport.post_json(&req).ok()?
        };
        if !resp.is_success() {
            return None;
        }
        let body: Value = serde_json::from_str(&resp.body).ok()?;
        let content = body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)?;
        parse_reranker_response(content, candidates)
    }
}

impl Reranker for LlmReranker {
    fn rerank(
        &self,
        query: &str,
        candidates: &[&ToolNode],
        _ctx: &QueryContext<'_>,
    ) -> Result<RerankOutcome, RetrievalError> {
        if candidates.len() <= 1 {
            return Ok(RerankOutcome::identity(candidates.len()));
        }
        Ok(match self.call(query, candidates) {
            Some((order, _repaired)) => RerankOutcome {
                order,
                fallback: false,
            },
            None => RerankOutcome {
                order: (0..candidates.len()).collect(),
                fallback: true,
            },
        })
    }
}
