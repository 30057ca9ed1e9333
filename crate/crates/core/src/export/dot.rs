//! Graphviz rendering. Lossy: only the label-relevant properties appear.

use std::fmt::Write;

use crate::cpg::{Cpg, EdgeType, Node, PropertyValue};

fn color(ty: EdgeType) -> &'static str {
    match ty {
        EdgeType::Ast => "green",
        EdgeType::Cfg => "red",
        EdgeType::Ddg => "blue",
        EdgeType::Cg => "black",
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn node_label(n: &Node) -> String {
    let detail = match n.inst_type() {
        Some(t) => {
            let extra = n
                .label()
                .map(str::to_string)
                .or_else(|| n.text(crate::cpg::PropKey::Opcode).map(str::to_string))
                .or_else(|| n.get(crate::cpg::PropKey::Value).map(PropertyValue::to_string));
            match extra {
                Some(x) => format!("{t}/{x}"),
                None => t.to_string(),
            }
        }
        None => match n.name() {
            Some(name) => format!("{} {name}", n.kind),
            None => n.kind.to_string(),
        },
    };
    format!("{}: {detail}", n.id.0)
}

/// Renders the graph, keeping only edges whose type is in `edge_types`
/// (all types when `None`).
pub fn to_dot(g: &Cpg, edge_types: Option<&[EdgeType]>) -> String {
    let mut out = String::from("digraph cpg {\n  node [shape=box, fontname=\"monospace\"];\n");
    for n in g.nodes() {
        writeln!(out, "  n{} [label=\"{}\"];", n.id.0, escape(&node_label(n))).expect("write to string");
    }
    for e in g.edges() {
        if edge_types.is_some_and(|keep| !keep.contains(&e.ty)) {
            continue;
        }
        let mut attrs = format!("color={}", color(e.ty));
        if let Some(l) = e.label() {
            write!(attrs, ", label=\"{}\"", escape(&l.to_string())).expect("write to string");
        }
        writeln!(out, "  n{} -> n{} [{attrs}];", e.src.0, e.dst.0).expect("write to string");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_from_wat;

    #[test]
    fn edge_colors_and_filter() {
        let (_, b) = build_from_wat("(module (func (result i32) i32.const 1 i32.const 2 i32.add))").unwrap();
        let all = to_dot(&b.cpg, None);
        assert!(all.contains("color=green") && all.contains("color=red") && all.contains("color=blue"));
        assert!(all.contains("label=\"2: Const/1\""));
        let ddg_only = to_dot(&b.cpg, Some(&[EdgeType::Ddg]));
        assert!(!ddg_only.contains("color=green") && ddg_only.contains("color=blue"));
    }

    #[test]
    fn quotes_are_escaped() {
        assert_eq!(escape("a\"b\\"), "a\\\"b\\\\");
    }
}
