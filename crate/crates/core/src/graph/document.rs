//! Canonical JSON serialization of the tool knowledge graph.
//!
//! ```json
//! { "tools": [ { "name": "get_stock_price", "description": "...", "type": "regular",
//!                "parameters": [ { "name": "ticker", "description": "...", "type": "string", "required": true } ],
//!                "dependencies": [ { "target": "get_stock_ticker",
//!                                    "relation": "parameter_directly_depends_on",
//!                                    "reason": "...", "parameter_name": "ticker" } ] } ] }
//! ```

use serde::{Deserialize, Serialize};

use super::{Relation, ToolKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub tools: Vec<ToolEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolEntry {
    /// Explicit id. When absent the tool name is the id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "type")]
    pub kind: ToolKind,
    #[serde(default)]
    pub parameters: Vec<ParameterEntry>,
    #[serde(default)]
    pub dependencies: Vec<DependencyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterEntry {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "type", default)]
    pub value_kind: String,
    #[serde(default)]
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependencyEntry {
    pub target: String,
    pub relation: Relation,
    #[serde(default)]
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter_name: Option<String>,
}
