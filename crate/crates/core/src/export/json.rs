//! Canonical, lossless JSON form of a graph.
//!
//! ```text
//! {"version": "1.0",
//!  "nodes": [{"id": 0, "kind": "Module", "properties": {"name": "$m"}}, ...],
//!  "edges": [{"id": 0, "src": 0, "dst": 1, "type": "AST", "properties": {}}, ...]}
//! ```
//!
//! Finite floats are JSON numbers with a fraction part; NaN and infinities
//! are `{"f64bits": "0x..."}` objects so every bit pattern survives.

use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::cpg::{Cpg, EdgeType, GraphBuilder, GraphError, NodeKind, PropKey, Properties, PropertyValue};

pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported graph format version `{0}`; this build reads {FORMAT_VERSION}")]
    Version(String),
    #[error("malformed graph file: {0}")]
    Malformed(String),
    #[error("graph file violates the schema: {0}")]
    Graph(#[from] GraphError),
}

fn property_json(v: &PropertyValue) -> Value {
    match v {
        PropertyValue::Bool(b) => json!(b),
        PropertyValue::Int(i) => json!(i),
        PropertyValue::Float(f) if f.is_finite() => json!(f),
        PropertyValue::Float(f) => json!({ "f64bits": format!("{:#018x}", f.to_bits()) }),
        PropertyValue::Text(s) => json!(s),
    }
}

fn properties_json(p: &Properties) -> Value {
    let map: Map<String, Value> = p.iter().map(|(k, v)| (k.as_str().to_string(), property_json(v))).collect();
    Value::Object(map)
}

/// Serializes the graph. Output depends only on the graph, so equal graphs
/// give byte-identical text.
pub fn to_json_string(g: &Cpg) -> String {
    let nodes: Vec<Value> = g
        .nodes()
        .map(|n| json!({ "id": n.id.0, "kind": n.kind.as_str(), "properties": properties_json(n.props()) }))
        .collect();
    let edges: Vec<Value> = g
        .edges()
        .map(|e| {
            json!({
                "id": e.id.0,
                "src": e.src.0,
                "dst": e.dst.0,
                "type": e.ty.as_str(),
                "properties": properties_json(e.props()),
            })
        })
        .collect();
    let doc = json!({ "version": FORMAT_VERSION, "nodes": nodes, "edges": edges });
    let mut s = serde_json::to_string_pretty(&doc).expect("graph serializes");
    s.push('\n');
    s
}

fn malformed(msg: impl Into<String>) -> ImportError {
    ImportError::Malformed(msg.into())
}

fn property_value(v: &Value) -> Result<PropertyValue, ImportError> {
    Ok(match v {
        Value::Bool(b) => PropertyValue::Bool(*b),
        Value::Number(n) if n.is_f64() => PropertyValue::Float(n.as_f64().expect("f64 number")),
        Value::Number(n) => PropertyValue::Int(n.as_i64().ok_or_else(|| malformed(format!("integer {n} out of range")))?),
        Value::String(s) => PropertyValue::Text(s.clone()),
        Value::Object(o) => {
            let bits = o
                .get("f64bits")
                .and_then(Value::as_str)
                .and_then(|s| s.strip_prefix("0x"))
                .and_then(|s| u64::from_str_radix(s, 16).ok())
                .ok_or_else(|| malformed("object property values must be {\"f64bits\": \"0x...\"}"))?;
            PropertyValue::Float(f64::from_bits(bits))
        }
        other => return Err(malformed(format!("unsupported property value {other}"))),
    })
}

fn properties(v: Option<&Value>) -> Result<Properties, ImportError> {
    let Some(v) = v else { return Ok(Properties::new()) };
    let obj = v.as_object().ok_or_else(|| malformed("`properties` must be an object"))?;
    obj.iter()
        .map(|(k, v)| {
            let key = PropKey::from_str(k).map_err(|e| malformed(e.to_string()))?;
            Ok((key, property_value(v)?))
        })
        .collect()
}

fn field_u32(o: &Value, name: &str) -> Result<u32, ImportError> {
    o.get(name)
        .and_then(Value::as_u64)
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| malformed(format!("missing or invalid `{name}`")))
}

fn field_str<'a>(o: &'a Value, name: &str) -> Result<&'a str, ImportError> {
    o.get(name).and_then(Value::as_str).ok_or_else(|| malformed(format!("missing or invalid `{name}`")))
}

/// Rebuilds a graph from [`to_json_string`] output. Ids must be dense and
/// in order; every element is re-checked against the schema.
pub fn import_json(text: &str) -> Result<Cpg, ImportError> {
    let doc: Value = serde_json::from_str(text)?;
    let version = field_str(&doc, "version")?;
    let major = |v: &str| v.split('.').next().map(str::to_string);
    if major(version) != major(FORMAT_VERSION) {
        return Err(ImportError::Version(version.to_string()));
    }
    let list = |name: &str| {
        doc.get(name).and_then(Value::as_array).ok_or_else(|| malformed(format!("missing `{name}` array")))
    };
    let mut b = GraphBuilder::new();
    for (i, n) in list("nodes")?.iter().enumerate() {
        let id = field_u32(n, "id")?;
        if id as usize != i {
            return Err(malformed(format!("node id {id} at position {i}; ids must be dense and ordered")));
        }
        let kind = NodeKind::from_str(field_str(n, "kind")?).map_err(|e| malformed(e.to_string()))?;
        b.add_node(kind, properties(n.get("properties"))?)?;
    }
    for (i, e) in list("edges")?.iter().enumerate() {
        let id = field_u32(e, "id")?;
        if id as usize != i {
            return Err(malformed(format!("edge id {id} at position {i}; ids must be dense and ordered")));
        }
        let ty = EdgeType::from_str(field_str(e, "type")?).map_err(|e| malformed(e.to_string()))?;
        let (src, dst) = (field_u32(e, "src")?, field_u32(e, "dst")?);
        b.add_edge(crate::cpg::NodeId(src), crate::cpg::NodeId(dst), ty, properties(e.get("properties"))?)?;
    }
    Ok(b.freeze())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_from_wat;

    #[test]
    fn empty_module_has_one_node_and_no_edges() {
        let (_, b) = build_from_wat("(module)").unwrap();
        let doc: Value = serde_json::from_str(&to_json_string(&b.cpg)).unwrap();
        assert_eq!(doc["nodes"].as_array().unwrap().len(), 1);
        assert_eq!(doc["edges"].as_array().unwrap().len(), 0);
        assert_eq!(doc["version"], FORMAT_VERSION);
    }

    #[test]
    fn round_trip_preserves_special_floats() {
        let src = "(module (func (result f64) f64.const nan:0x4 drop f64.const -inf drop f64.const -0 drop f64.const 2))";
        let (_, b) = build_from_wat(src).unwrap();
        let text = to_json_string(&b.cpg);
        let back = import_json(&text).unwrap();
        assert_eq!(to_json_string(&back), text);
        assert!(text.contains("f64bits"));
    }

    #[test]
    fn wrong_major_version_is_rejected() {
        let err = import_json(r#"{"version": "2.0", "nodes": [], "edges": []}"#).unwrap_err();
        assert!(matches!(err, ImportError::Version(_)));
    }

    #[test]
    fn empty_graph_file_gives_empty_graph() {
        let g = import_json(r#"{"version": "1.0", "nodes": [], "edges": []}"#).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
    }

    #[test]
    fn out_of_order_ids_are_rejected() {
        let text = r#"{"version": "1.0", "nodes": [{"id": 1, "kind": "Module", "properties": {"name": "m"}}], "edges": []}"#;
        assert!(matches!(import_json(text), Err(ImportError::Malformed(_))));
    }
}
