//! Tab-separated fact files, one per predicate, plus a `schema.dl` with the
//! matching declarations. Absent properties are empty fields so every row
//! has the predicate's arity.

use std::fmt::Write;

use crate::cpg::{Cpg, DdgType, EdgeType, InstType, Node, NodeKind, PropKey, PropertyValue};

/// Predicate name and column names, in file order.
pub const PREDICATES: &[(&str, &[&str])] = &[
    ("instruction", &["id", "instType"]),
    ("function", &["id", "name", "index", "nargs", "nlocals", "nresults", "isImport", "isExport"]),
    ("call", &["id", "label", "nargs", "nresults"]),
    ("loop", &["id", "label", "nresults"]),
    ("brIf", &["id", "label"]),
    ("store", &["id", "offset"]),
    ("binary", &["id", "opcode"]),
    ("compare", &["id", "opcode"]),
    ("astEdge", &["src", "dst", "childIndex"]),
    ("cfgEdge", &["src", "dst", "label"]),
    ("cgEdge", &["src", "dst"]),
    ("ddgEdge", &["src", "dst", "label", "ddgType", "valueType", "value", "originId"]),
];

pub fn arity(predicate: &str) -> Option<usize> {
    PREDICATES.iter().find(|(p, _)| *p == predicate).map(|(_, cols)| cols.len())
}

fn field(v: Option<&PropertyValue>) -> String {
    v.map(|v| v.to_string().replace(['\t', '\n'], " ")).unwrap_or_default()
}

fn row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join("\t"));
    out.push('\n');
}

fn node_props(n: &Node, keys: &[PropKey]) -> Vec<String> {
    let mut v = vec![n.id.0.to_string()];
    v.extend(keys.iter().map(|k| field(n.get(*k))));
    v
}

/// `(file name, contents)` for every predicate, in [`PREDICATES`] order,
/// followed by `schema.dl`.
pub fn datalog_facts(g: &Cpg) -> Vec<(String, String)> {
    let mut files: Vec<String> = vec![String::new(); PREDICATES.len()];
    let slot = |name: &str| PREDICATES.iter().position(|(p, _)| *p == name).expect("known predicate");
    for n in g.nodes() {
        if n.kind == NodeKind::Function {
            use PropKey as K;
            let keys = [K::Name, K::Index, K::NArgs, K::NLocals, K::NResults, K::IsImport, K::IsExport];
            row(&mut files[slot("function")], &node_props(n, &keys));
        }
        let Some(t) = n.inst_type() else { continue };
        row(&mut files[slot("instruction")], &[n.id.0.to_string(), t.to_string()]);
        let (pred, keys): (&str, &[PropKey]) = match t {
            InstType::Call => ("call", &[PropKey::Label, PropKey::NArgs, PropKey::NResults]),
            InstType::Loop => ("loop", &[PropKey::Label, PropKey::NResults]),
            InstType::BrIf => ("brIf", &[PropKey::Label]),
            InstType::Store => ("store", &[PropKey::Offset]),
            InstType::Binary => ("binary", &[PropKey::Opcode]),
            InstType::Compare => ("compare", &[PropKey::Opcode]),
            _ => continue,
        };
        row(&mut files[slot(pred)], &node_props(n, keys));
    }
    for e in g.edges() {
        let (s, d) = (e.src.0.to_string(), e.dst.0.to_string());
        match e.ty {
            EdgeType::Ast => row(&mut files[slot("astEdge")], &[s, d, field(e.get(PropKey::ChildIndex))]),
            EdgeType::Cfg => row(&mut files[slot("cfgEdge")], &[s, d, field(e.label())]),
            EdgeType::Cg => row(&mut files[slot("cgEdge")], &[s, d]),
            EdgeType::Ddg => {
                let origin = s.clone();
                let kind = e.ddg_type().map(DdgType::as_str).unwrap_or_default().to_string();
                let fields = [
                    s,
                    d,
                    field(e.label()),
                    kind,
                    field(e.get(PropKey::ValueType)),
                    field(e.get(PropKey::Value)),
                    origin,
                ];
                row(&mut files[slot("ddgEdge")], &fields);
            }
        }
    }
    let mut out: Vec<(String, String)> =
        PREDICATES.iter().zip(files).map(|((p, _), body)| (format!("{p}.facts"), body)).collect();
    out.push(("schema.dl".to_string(), schema()));
    out
}

fn schema() -> String {
    let mut s = String::new();
    for (p, cols) in PREDICATES {
        let typed: Vec<String> = cols.iter().map(|c| format!("{c}: symbol")).collect();
        writeln!(s, ".decl {p}({})", typed.join(", ")).expect("write to string");
        writeln!(s, ".input {p}").expect("write to string");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_arities() {
        assert_eq!(arity("ddgEdge"), Some(7));
        assert_eq!(arity("call"), Some(4));
        assert_eq!(arity("nope"), None);
    }
}
