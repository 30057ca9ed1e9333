//! `nodes.csv` and `edges.csv` in the neo4j-admin bulk-import layout. Each
//! node's kind is its label, so `(f:Function)-[:AST*1..]->(i:Instruction)`
//! patterns resolve after import.

use crate::cpg::{Cpg, PropKey, PropertyValue};

/// Node property columns with their import types.
const NODE_COLUMNS: &[(PropKey, &str)] = &[
    (PropKey::InstType, ""),
    (PropKey::Name, ""),
    (PropKey::Index, ":long"),
    (PropKey::Label, ""),
    (PropKey::NArgs, ":long"),
    (PropKey::NLocals, ":long"),
    (PropKey::NResults, ":long"),
    (PropKey::IsImport, ":boolean"),
    (PropKey::IsExport, ":boolean"),
    (PropKey::HasElse, ":boolean"),
    (PropKey::Opcode, ""),
    (PropKey::Offset, ":long"),
    (PropKey::ValueType, ""),
    (PropKey::Value, ""),
];

const EDGE_COLUMNS: &[(PropKey, &str)] = &[
    (PropKey::ChildIndex, ":long"),
    (PropKey::Label, ""),
    (PropKey::DdgType, ""),
    (PropKey::ValueType, ""),
    (PropKey::Value, ""),
];

fn cell(v: Option<&PropertyValue>) -> String {
    v.map(PropertyValue::to_string).unwrap_or_default()
}

fn header(fixed: &[&str], cols: &[(PropKey, &str)]) -> Vec<String> {
    let mut h: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    h.extend(cols.iter().map(|(k, ty)| format!("{k}{ty}")));
    h
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is UTF-8")
}

/// `(nodes.csv, edges.csv)` contents.
pub fn neo4j_csv(g: &Cpg) -> (String, String) {
    let mut nw = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    nw.write_record(header(&[":ID", ":LABEL"], NODE_COLUMNS)).expect("in-memory csv");
    for n in g.nodes() {
        let mut rec = vec![n.id.0.to_string(), n.kind.to_string()];
        rec.extend(NODE_COLUMNS.iter().map(|(k, _)| cell(n.get(*k))));
        nw.write_record(rec).expect("in-memory csv");
    }
    let mut ew = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    ew.write_record(header(&[":START_ID", ":END_ID", ":TYPE"], EDGE_COLUMNS)).expect("in-memory csv");
    for e in g.edges() {
        let mut rec = vec![e.src.0.to_string(), e.dst.0.to_string(), e.ty.to_string()];
        rec.extend(EDGE_COLUMNS.iter().map(|(k, _)| cell(e.get(*k))));
        ew.write_record(rec).expect("in-memory csv");
    }
    (finish(nw), finish(ew))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_from_wat;

    #[test]
    fn one_row_per_element_plus_header() {
        let (_, b) = build_from_wat("(module (func $f (result i32) i32.const 1))").unwrap();
        let (nodes, edges) = neo4j_csv(&b.cpg);
        assert_eq!(nodes.lines().count(), b.cpg.node_count() + 1);
        assert_eq!(edges.lines().count(), b.cpg.edge_count() + 1);
        assert!(nodes.starts_with(":ID,:LABEL,instType,name,index:long"));
        assert!(nodes.contains(",Function,"));
    }
}
