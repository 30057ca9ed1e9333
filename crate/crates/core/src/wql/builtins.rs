//! Built-in functions, bound to the native query layer.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::cpg::{DdgType, NodeId};
use crate::query::{self, Pred};
use crate::vuln::Finding;

use super::error::{Pos, WqlError};
use super::interp::{expect_node, new_map, Interp, Result};
use super::value::Value;

/// Names accepted by [`call`].
pub const BUILTINS: &[&str] = &[
    "functions",
    "instructions",
    "descendantsCFG",
    "descendantsAST",
    "ascendantsAST",
    "reachesDDG",
    "vulnerability",
    "List",
    "Map",
    "callees",
    "params",
    "readsParam",
    "valueDeps",
    "child",
    "childrenAST",
    "parentAST",
    "functionOf",
    "sort",
    "keys",
    "len",
    "str",
    "isInt",
];

fn nodes(v: Vec<NodeId>) -> Value {
    Value::list(v.into_iter().map(Value::Node).collect())
}

fn want(name: &str, args: &[Value], range: std::ops::RangeInclusive<usize>, pos: Pos) -> Result<()> {
    if range.contains(&args.len()) {
        return Ok(());
    }
    let expected = if range.start() == range.end() {
        range.start().to_string()
    } else {
        format!("{} to {}", range.start(), range.end())
    };
    Err(WqlError::runtime(pos, format!("`{name}` takes {expected} argument(s), got {}", args.len())))
}

fn text<'a>(v: &'a Value, what: &str, pos: Pos) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| WqlError::runtime(pos, format!("{what} must be text, found {}", v.a_type_name())))
}

fn int(v: &Value, what: &str, pos: Pos) -> Result<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(WqlError::runtime(pos, format!("{what} must be an integer, found {}", other.a_type_name()))),
    }
}

fn node_list(v: &Value, pos: Pos) -> Result<Vec<NodeId>> {
    match v {
        Value::Node(n) => Ok(vec![*n]),
        Value::List(l) => l.borrow().iter().map(|x| expect_node(x, pos)).collect(),
        other => Err(WqlError::runtime(pos, format!("expected a node or node list, found {}", other.a_type_name()))),
    }
}

pub fn call(it: &mut Interp, name: &str, args: Vec<Value>, pos: Pos) -> Result<Value> {
    let g = it.g;
    match name {
        "functions" => {
            want(name, &args, 0..=0, pos)?;
            Ok(nodes(query::functions(g)))
        }
        "instructions" => {
            want(name, &args, 1..=1, pos)?;
            let fs = node_list(&args[0], pos)?;
            query::instructions(g, &fs, &Pred::True)
                .map(nodes)
                .map_err(|e| WqlError::runtime(pos, e.to_string()))
        }
        "descendantsCFG" | "descendantsAST" | "ascendantsAST" | "callees" | "childrenAST" => {
            want(name, &args, 1..=1, pos)?;
            let n = expect_node(&args[0], pos)?;
            Ok(nodes(match name {
                "descendantsCFG" => query::descendants_cfg(g, n),
                "descendantsAST" => query::descendants_ast(g, n),
                "ascendantsAST" => query::ascendants_ast(g, n),
                "callees" => query::callees(g, n),
                _ => g.ast_children(n),
            }))
        }
        "parentAST" | "functionOf" => {
            want(name, &args, 1..=1, pos)?;
            let n = expect_node(&args[0], pos)?;
            let r = if name == "parentAST" { g.ast_parent(n) } else { query::enclosing_function(g, n) };
            Ok(r.map(Value::Node).unwrap_or(Value::Nil))
        }
        "child" => {
            want(name, &args, 2..=2, pos)?;
            let n = expect_node(&args[0], pos)?;
            let i = int(&args[1], "child index", pos)?;
            Ok(usize::try_from(i).ok().and_then(|i| g.ast_child(n, i)).map(Value::Node).unwrap_or(Value::Nil))
        }
        "reachesDDG" => {
            want(name, &args, 4..=4, pos)?;
            let (a, b) = (expect_node(&args[0], pos)?, expect_node(&args[1], pos)?);
            let kind = text(&args[2], "dependency type", pos)?;
            let kind = DdgType::from_str(kind).map_err(|e| WqlError::runtime(pos, e.to_string()))?;
            let label = text(&args[3], "dependency label", pos)?;
            Ok(Value::Bool(query::reaches_ddg(g, a, b, kind, label)))
        }
        "params" => {
            want(name, &args, 1..=1, pos)?;
            let f = expect_node(&args[0], pos)?;
            Ok(Value::list(query::params(g, f).into_iter().map(Value::text).collect()))
        }
        "readsParam" => {
            want(name, &args, 3..=3, pos)?;
            let (f, n) = (expect_node(&args[0], pos)?, expect_node(&args[1], pos)?);
            let var = text(&args[2], "variable", pos)?;
            Ok(Value::Bool(query::reads_param(g, f, n, var)))
        }
        "valueDeps" => {
            want(name, &args, 1..=1, pos)?;
            let n = expect_node(&args[0], pos)?;
            let deps = query::value_deps(g, n)
                .into_iter()
                .map(|d| {
                    Value::map(BTreeMap::from([
                        ("origin".to_string(), Value::Node(d.origin)),
                        ("kind".to_string(), Value::text(d.kind.as_str())),
                        ("label".to_string(), Value::text(&d.label)),
                    ]))
                })
                .collect();
            Ok(Value::list(deps))
        }
        "vulnerability" => {
            want(name, &args, 3..=5, pos)?;
            let kind = text(&args[0], "vulnerability kind", pos)?.to_string();
            let function = text(&args[1], "function name", pos)?.to_string();
            let label = text(&args[2], "label", pos)?.to_string();
            let description = match args.get(3) {
                Some(d) => text(d, "description", pos)?.to_string(),
                None => String::new(),
            };
            let involved = match args.get(4) {
                Some(v) => node_list(v, pos)?.into_iter().map(|n| n.0).collect(),
                None => Vec::new(),
            };
            it.findings.push(Finding { query: it.query_id, kind, function, label, description, nodes: involved });
            Ok(Value::Nil)
        }
        "List" => Ok(Value::list(args)),
        "Map" => {
            want(name, &args, 0..=0, pos)?;
            Ok(new_map())
        }
        "sort" => {
            want(name, &args, 1..=1, pos)?;
            let Value::List(l) = &args[0] else {
                return Err(WqlError::runtime(pos, format!("cannot sort {}", args[0].a_type_name())));
            };
            let mut v = l.borrow().clone();
            v.sort_by(|a, b| a.order(b));
            Ok(Value::list(v))
        }
        "keys" => {
            want(name, &args, 1..=1, pos)?;
            match &args[0] {
                Value::Map(m) => Ok(Value::list(m.borrow().keys().map(Value::text).collect())),
                other => Err(WqlError::runtime(pos, format!("{} has no keys", other.a_type_name()))),
            }
        }
        "len" => {
            want(name, &args, 1..=1, pos)?;
            match &args[0] {
                Value::List(l) => Ok(Value::Int(l.borrow().len() as i64)),
                Value::Map(m) => Ok(Value::Int(m.borrow().len() as i64)),
                Value::Text(s) => Ok(Value::Int(s.chars().count() as i64)),
                Value::Nil => Ok(Value::Int(0)),
                other => Err(WqlError::runtime(pos, format!("{} has no length", other.a_type_name()))),
            }
        }
        "str" => {
            want(name, &args, 1..=1, pos)?;
            Ok(Value::text(args[0].to_string()))
        }
        "isInt" => {
            want(name, &args, 1..=1, pos)?;
            Ok(Value::Bool(matches!(args[0], Value::Int(_))))
        }
        _ => Err(WqlError::runtime(pos, format!("unknown built-in `{name}`"))),
    }
}
