//! Per-kind property schemas, checked on every insertion.

use super::property::{Properties, PropertyValue};
use super::types::{DdgType, EdgeType, InstType, NodeKind, PropKey};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema violation on {element}: {message}")]
pub struct SchemaError {
    pub element: String,
    pub message: String,
}

use PropKey as K;

/// `(required, optional)` keys of a node kind (and instruction type).
pub fn node_keys(kind: NodeKind, inst: Option<InstType>) -> (&'static [PropKey], &'static [PropKey]) {
    use InstType as I;
    match kind {
        NodeKind::Module => (&[K::Name], &[]),
        NodeKind::Function => (
            &[K::Name, K::Index, K::NArgs, K::NLocals, K::NResults, K::IsImport, K::IsExport],
            &[],
        ),
        NodeKind::VarNode => (&[K::ValueType], &[K::Name, K::Index]),
        NodeKind::Instruction => match inst {
            None => (&[K::InstType], &[]),
            Some(i) => match i {
                I::Nop | I::Unreachable | I::Return | I::BrTable | I::Drop | I::Select | I::MemorySize
                | I::MemoryGrow => (&[K::InstType], &[]),
                I::CallIndirect => (&[K::InstType], &[K::NArgs, K::NResults]),
                I::Br | I::BrIf | I::GlobalGet | I::GlobalSet | I::LocalGet | I::LocalSet | I::LocalTee
                | I::BeginBlock => (&[K::InstType, K::Label], &[]),
                I::Call => (&[K::InstType, K::Label, K::NArgs, K::NResults], &[]),
                I::Block | I::Loop => (&[K::InstType, K::Label, K::NResults], &[]),
                I::If => (&[K::InstType, K::Label, K::HasElse], &[]),
                I::Const => (&[K::InstType, K::ValueType, K::Value], &[]),
                I::Binary | I::Compare | I::Unary | I::Convert => (&[K::InstType, K::Opcode], &[]),
                I::Load | I::Store => (&[K::InstType, K::Offset], &[K::Opcode]),
            },
        },
        _ => (&[], &[]),
    }
}

fn is_count(v: &PropertyValue) -> bool {
    matches!(v, PropertyValue::Int(i) if *i >= 0)
}

fn is_text(v: &PropertyValue) -> bool {
    matches!(v, PropertyValue::Text(_))
}

fn is_val_type(v: &PropertyValue) -> bool {
    matches!(v.as_str(), Some("i32" | "i64" | "f32" | "f64"))
}

/// Value domain of a node property.
fn node_value_ok(key: PropKey, v: &PropertyValue) -> bool {
    match key {
        K::InstType => v.as_str().is_some_and(|s| s.parse::<InstType>().is_ok()),
        K::Name | K::Label | K::Opcode => is_text(v),
        K::Index | K::NArgs | K::NLocals | K::NResults | K::Offset | K::ChildIndex => is_count(v),
        K::IsImport | K::IsExport | K::HasElse => matches!(v, PropertyValue::Bool(_)),
        K::ValueType => is_val_type(v),
        K::Value => matches!(v, PropertyValue::Int(_) | PropertyValue::Float(_)),
        K::DdgType => false,
    }
}

fn check_keys(
    element: &str,
    props: &Properties,
    required: &[PropKey],
    optional: &[PropKey],
    value_ok: impl Fn(PropKey, &PropertyValue) -> bool,
) -> Result<(), SchemaError> {
    let err = |message: String| SchemaError { element: element.to_string(), message };
    for k in required {
        if !props.contains(*k) {
            return Err(err(format!("missing required property `{k}`")));
        }
    }
    for (k, v) in props.iter() {
        if !required.contains(&k) && !optional.contains(&k) {
            return Err(err(format!("property `{k}` is not allowed")));
        }
        if !value_ok(k, v) {
            return Err(err(format!("value `{v}` is outside the domain of `{k}`")));
        }
    }
    Ok(())
}

/// Validates a node's properties; returns its parsed instruction type.
pub fn check_node(kind: NodeKind, props: &Properties) -> Result<Option<InstType>, SchemaError> {
    let inst = match (kind, props.get(K::InstType)) {
        (NodeKind::Instruction, Some(v)) => Some(v.as_str().and_then(|s| s.parse().ok()).ok_or_else(|| {
            SchemaError { element: kind.to_string(), message: format!("invalid instType `{v}`") }
        })?),
        _ => None,
    };
    let element = match inst {
        Some(i) => format!("Instruction/{i}"),
        None => kind.to_string(),
    };
    let (required, optional) = node_keys(kind, inst);
    check_keys(&element, props, required, optional, node_value_ok)?;
    if let (Some(InstType::Const), Some(vt), Some(v)) = (inst, props.get(K::ValueType), props.get(K::Value)) {
        let int_type = matches!(vt.as_str(), Some("i32" | "i64"));
        let int_value = matches!(v, PropertyValue::Int(_));
        if int_type != int_value {
            return Err(SchemaError { element, message: format!("value `{v}` does not match valueType `{vt}`") });
        }
    }
    Ok(inst)
}

/// `(required, optional)` keys of an edge type; DDG depends on ddgType.
pub fn edge_keys(ty: EdgeType, ddg: Option<DdgType>) -> (&'static [PropKey], &'static [PropKey]) {
    match ty {
        EdgeType::Ast => (&[], &[K::ChildIndex]),
        EdgeType::Cfg => (&[], &[K::Label]),
        EdgeType::Cg => (&[], &[]),
        EdgeType::Ddg => match ddg {
            Some(DdgType::Const) => (&[K::DdgType, K::Label, K::ValueType, K::Value], &[]),
            _ => (&[K::DdgType, K::Label], &[]),
        },
    }
}

/// Validates an edge's properties; returns its parsed ddgType.
pub fn check_edge(ty: EdgeType, props: &Properties) -> Result<Option<DdgType>, SchemaError> {
    let ddg = match (ty, props.get(K::DdgType)) {
        (EdgeType::Ddg, Some(v)) => Some(v.as_str().and_then(|s| s.parse().ok()).ok_or_else(|| SchemaError {
            element: "DDG edge".into(),
            message: format!("invalid ddgType `{v}`"),
        })?),
        _ => None,
    };
    let element = format!("{ty} edge");
    let (required, optional) = edge_keys(ty, ddg);
    check_keys(&element, props, required, optional, |k, v| match (ty, k) {
        (EdgeType::Ast, K::ChildIndex) => is_count(v),
        (EdgeType::Cfg, K::Label) => match v {
            PropertyValue::Bool(_) => true,
            PropertyValue::Int(i) => *i >= 0,
            PropertyValue::Text(s) => s == "default",
            PropertyValue::Float(_) => false,
        },
        (EdgeType::Ddg, K::DdgType) => true,
        (EdgeType::Ddg, K::Label) => is_text(v),
        (EdgeType::Ddg, K::ValueType) => is_val_type(v),
        (EdgeType::Ddg, K::Value) => matches!(v, PropertyValue::Int(_) | PropertyValue::Float(_)),
        _ => false,
    })?;
    Ok(ddg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn const_node_schema() {
        let p = Properties::new()
            .with(K::InstType, "Const")
            .with(K::ValueType, "i32")
            .with(K::Value, 2i64);
        assert_eq!(check_node(NodeKind::Instruction, &p).unwrap(), Some(InstType::Const));
        let bad = p.clone().with(K::Value, 2.5f64);
        assert!(check_node(NodeKind::Instruction, &bad).is_err());
        let missing = Properties::new().with(K::InstType, "Const").with(K::Value, 2i64);
        assert!(check_node(NodeKind::Instruction, &missing).is_err());
    }

    #[test]
    fn extra_keys_rejected() {
        let p = Properties::new().with(K::InstType, "Nop").with(K::Label, "x");
        assert!(check_node(NodeKind::Instruction, &p).is_err());
    }

    #[test]
    fn edge_schemas() {
        let cfg = Properties::new().with(K::Label, true);
        assert!(check_edge(EdgeType::Cfg, &cfg).is_ok());
        assert!(check_edge(EdgeType::Cfg, &Properties::new().with(K::Label, "other")).is_err());
        assert!(check_edge(EdgeType::Cg, &cfg).is_err());
        let ddg = Properties::new().with(K::DdgType, "Local").with(K::Label, "$y");
        assert_eq!(check_edge(EdgeType::Ddg, &ddg).unwrap(), Some(DdgType::Local));
        let c = Properties::new().with(K::DdgType, "Const").with(K::Label, "2");
        assert!(check_edge(EdgeType::Ddg, &c).is_err());
        let c = c.with(K::ValueType, "i32").with(K::Value, 2i64);
        assert!(check_edge(EdgeType::Ddg, &c).is_ok());
    }
}
