//! Import adapter for KG documents that use other field names than the
//! canonical schema, such as the published ToolLinkOS files.
//!
//! Accepted layouts:
//! - a top-level array of tools, an object holding the array under `tools`,
//!   `nodes` or `data`, or an object keyed by tool name;
//! - tool name under `name`, `tool_name`, `function_name` or `tool`;
//! - node type under `type`, `tool_type`, `node_type`, `kind` or `category`
//!   (anything mentioning "core" is a core tool), or a boolean `is_core`;
//! - parameters as an array of objects, an object keyed by parameter name, or
//!   a JSON-schema object with `properties` and `required`;
//! - dependencies as an array of objects or strings, or an object keyed by
//!   relation type; relation names are matched leniently.

use serde_json::{Map, Value};

use super::{DependencyEntry, GraphDocument, GraphError, ParameterEntry, Relation, ToolEntry, ToolKind};

const NAME_KEYS: &[&str] = &["name", "tool_name", "function_name", "tool"];
const DESCRIPTION_KEYS: &[&str] = &["description", "tool_description", "desc"];
const KIND_KEYS: &[&str] = &["type", "tool_type", "node_type", "kind", "category"];
const PARAM_KEYS: &[&str] = &["parameters", "params", "arguments", "args"];
const DEP_KEYS: &[&str] = &["dependencies", "relationships", "edges", "depends_on"];
const TARGET_KEYS: &[&str] = &[
    "target",
    "target_tool",
    "tool_name",
    "depends_on",
    "name",
    "tool",
];
const RELATION_KEYS: &[&str] = &["relation", "relationship", "relationship_type", "type"];
const REASON_KEYS: &[&str] = &["reason", "description", "explanation"];
const PARAM_NAME_KEYS: &[&str] = &["parameter_name", "parameter", "param"];

pub fn import_document(bytes: &[u8]) -> Result<GraphDocument, GraphError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| GraphError::Parse {
        line: e.line(),
        column: e.column(),
        path: ".".into(),
        message: e.to_string(),
    })?;
    import_value(&root)
}

pub fn import_value(root: &Value) -> Result<GraphDocument, GraphError> {
    let entries: Vec<(Option<String>, &Map<String, Value>)> = match root {
        Value::Array(items) => objects(items, "top-level array")?,
        Value::Object(obj) => {
            if let Some(items) = ["tools", "nodes", "data"]
                .iter()
                .find_map(|k| obj.get(*k).and_then(Value::as_array))
            {
                objects(items, "tools array")?
            } else {
                obj.iter()
                    .map(|(k, v)| match v {
                        Value::Object(o) => Ok((Some(k.clone()), o)),
                        _ => Err(GraphError::Import(format!("tool `{k}` is not an object"))),
                    })
                    .collect::<Result<_, _>>()?
            }
        }
        _ => return Err(GraphError::Import("expected an array or object".into())),
    };

    let tools = entries
        .into_iter()
        .enumerate()
        .map(|(i, (key, obj))| import_tool(i, key, obj))
        .collect::<Result<_, _>>()?;
    Ok(GraphDocument { tools })
}

fn objects<'a>(
    items: &'a [Value],
    what: &str,
) -> Result<Vec<(Option<String>, &'a Map<String, Value>)>, GraphError> {
    items
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Object(o) => Ok((None, o)),
            _ => Err(GraphError::Import(format!("{what}[{i}] is not an object"))),
        })
        .collect()
}

fn first<'a>(obj: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(*k))
}

fn first_str(obj: &Map<String, Value>, keys: &[&str]) -> Option<String> {
    keys.iter()
        .find_map(|k| obj.get(*k).and_then(Value::as_str))
        .map(str::to_string)
}

fn import_tool(
    index: usize,
    key: Option<String>,
    obj: &Map<String, Value>,
) -> Result<ToolEntry, GraphError> {
    let name = first_str(obj, NAME_KEYS)
        .or(key)
        .ok_or_else(|| GraphError::Import(format!("tools[{index}] has no name")))?;
    let description = first_str(obj, DESCRIPTION_KEYS).unwrap_or_default();
    let kind = match obj.get("is_core").and_then(Value::as_bool) {
        Some(true) => ToolKind::Core,
        Some(false) => ToolKind::Regular,
        None => match first_str(obj, KIND_KEYS) {
            Some(k) if k.to_ascii_lowercase().contains("core") => ToolKind::Core,
            _ => ToolKind::Regular,
        },
    };
    let parameters = match first(obj, PARAM_KEYS) {
        Some(v) => import_parameters(&name, v)?,
        None => Vec::new(),
    };
    let dependencies = match first(obj, DEP_KEYS) {
        Some(v) => import_dependencies(&name, v)?,
        None => Vec::new(),
    };
    Ok(ToolEntry {
        id: None,
        name,
        description,
        kind,
        parameters,
        dependencies,
    })
}

fn import_parameters(tool: &str, v: &Value) -> Result<Vec<ParameterEntry>, GraphError> {
    match v {
        Value::Null => Ok(Vec::new()),
        Value::Array(items) => items
            .iter()
            .map(|item| match item {
                Value::String(s) => Ok(ParameterEntry {
                    name: s.clone(),
                    description: String::new(),
                    value_kind: String::new(),
                    required: false,
                }),
                Value::Object(o) => Ok(ParameterEntry {
                    name: first_str(o, &["name", "parameter_name", "param"]).unwrap_or_default(),
                    description: first_str(o, &["description"]).unwrap_or_default(),
                    value_kind: type_label(o.get("type")),
                    required: o.get("required").and_then(Value::as_bool).unwrap_or(false),
                }),
                _ => Err(GraphError::Import(format!(
                    "tool `{tool}`: unsupported parameter entry"
                ))),
            })
            .collect(),
        Value::Object(o) => {
            // JSON-schema style: {"type": "object", "properties": {...}, "required": [...]}
            if let Some(Value::Object(props)) = o.get("properties") {
                let required: Vec<&str> = o
                    .get("required")
                    .and_then(Value::as_array)
                    .map(|r| r.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                return Ok(props
                    .iter()
                    .map(|(name, spec)| ParameterEntry {
                        name: name.clone(),
                        description: spec
                            .get("description")
                            .and_then(Value::as_str)
                            .unwrap_or_default()
                            .to_string(),
                        value_kind: type_label(spec.get("type")),
                        required: required.contains(&name.as_str()),
                    })
                    .collect());
            }
            Ok(o.iter()
                .map(|(name, spec)| ParameterEntry {
                    name: name.clone(),
                    description: spec
                        .get("description")
                        .and_then(Value::as_str)
                        .unwrap_or_default()
                        .to_string(),
                    value_kind: match spec {
                        Value::String(s) => s.clone(),
                        _ => type_label(spec.get("type")),
                    },
                    required: spec.get("required").and_then(Value::as_bool).unwrap_or(false),
                })
                .collect())
        }
        _ => Err(GraphError::Import(format!(
            "tool `{tool}`: parameters must be an array or object"
        ))),
    }
}

fn type_label(v: Option<&Value>) -> String {
    match v {
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
        None => String::new(),
    }
}

fn import_dependencies(tool: &str, v: &Value) -> Result<Vec<DependencyEntry>, GraphError> {
    match v {
        Value::Null => Ok(Vec::new()),
        Value::Array(items) => items
            .iter()
            .map(|item| import_dependency(tool, item, None))
            .collect(),
        Value::Object(groups) => {
            let mut out = Vec::new();
            for (rel_key, items) in groups {
                let relation = parse_relation(tool, rel_key)?;
                let items = match items {
                    Value::Array(a) => a.as_slice(),
                    single => std::slice::from_ref(single),
                };
                for item in items {
                    out.push(import_dependency(tool, item, Some(relation))?);
                }
            }
            Ok(out)
        }
        _ => Err(GraphError::Import(format!(
            "tool `{tool}`: dependencies must be an array or object"
        ))),
    }
}

fn import_dependency(
    tool: &str,
    item: &Value,
    relation: Option<Relation>,
) -> Result<DependencyEntry, GraphError> {
    match item {
        Value::String(target) => Ok(DependencyEntry {
            target: target.clone(),
            relation: relation.unwrap_or(Relation::ToolDirect),
            reason: String::new(),
            parameter_name: None,
        }),
        Value::Object(o) => {
            let target = first_str(o, TARGET_KEYS).ok_or_else(|| {
                GraphError::Import(format!("tool `{tool}`: dependency without target"))
            })?;
            let relation = match relation {
                Some(r) => r,
                None => match first_str(o, RELATION_KEYS) {
                    Some(r) => parse_relation(tool, &r)?,
                    None => Relation::ToolDirect,
                },
            };
            let parameter_name = first_str(o, PARAM_NAME_KEYS).filter(|p| !p.is_empty());
            Ok(DependencyEntry {
                target,
                relation,
                reason: first_str(o, REASON_KEYS).unwrap_or_default(),
                parameter_name,
            })
        }
        _ => Err(GraphError::Import(format!(
            "tool `{tool}`: unsupported dependency entry"
        ))),
    }
}

fn parse_relation(tool: &str, s: &str) -> Result<Relation, GraphError> {
    s.parse()
        .map_err(|e: String| GraphError::Import(format!("tool `{tool}`: {e}")))
}
