//! Call graph edges: direct calls to their callee, indirect calls to every
//! table-resident function of the expected signature.

use std::collections::BTreeMap;

use crate::builders::ast::AstLowering;
use crate::cpg::{EdgeType, GraphBuilder, NodeId, Properties};
use crate::error::BuildError;
use crate::frontend::{FuncType, FunctionIR, InstrKind, Instruction, ModuleIR};

/// Table-resident functions grouped by signature. Values are function
/// indices, ascending and duplicate free.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureIndex(pub BTreeMap<FuncType, Vec<u32>>);

impl SignatureIndex {
    pub fn get(&self, ty: &FuncType) -> &[u32] {
        self.0.get(ty).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn build_signature_index(module: &ModuleIR) -> SignatureIndex {
    let mut index: BTreeMap<FuncType, Vec<u32>> = BTreeMap::new();
    for &f in &module.table {
        if let Some(func) = module.function(f) {
            index.entry(func.signature()).or_default().push(f);
        }
    }
    for v in index.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    SignatureIndex(index)
}

/// Adds CG edges for every call site. Returns one warning per indirect call
/// that has no possible target.
pub fn build_cg(
    module: &ModuleIR,
    lowering: &AstLowering,
    index: &SignatureIndex,
    g: &mut GraphBuilder,
) -> Result<Vec<String>, BuildError> {
    let mut warnings = Vec::new();
    for (func, nodes) in module.functions.iter().zip(&lowering.functions) {
        let mut calls: Vec<(NodeId, &Instruction)> = Vec::new();
        collect_calls(&func.body, &mut |inst| calls.push((nodes.node_of(inst), inst)));
        for (node, inst) in calls {
            match &inst.kind {
                InstrKind::Call(f) => {
                    let callee = lowering
                        .functions
                        .get(f.index as usize)
                        .ok_or(BuildError::UndefinedCallee(f.index))?;
                    g.add_edge(node, callee.function, EdgeType::Cg, Properties::new())?;
                }
                InstrKind::CallIndirect { ty, .. } => {
                    let targets = index.get(ty);
                    if targets.is_empty() {
                        let msg = no_target_warning(func, node, ty);
                        log::warn!("{msg}");
                        warnings.push(msg);
                    }
                    for &t in targets {
                        g.add_edge(node, lowering.functions[t as usize].function, EdgeType::Cg, Properties::new())?;
                    }
                }
                _ => {}
            }
        }
    }
    Ok(warnings)
}

fn no_target_warning(func: &FunctionIR, node: NodeId, ty: &FuncType) -> String {
    format!("{}: call_indirect at node {node} has no table entry of type {ty}", func.name)
}

fn collect_calls<'a>(seq: &'a [Instruction], f: &mut impl FnMut(&'a Instruction)) {
    for inst in seq {
        match &inst.kind {
            InstrKind::Call(_) | InstrKind::CallIndirect { .. } => f(inst),
            InstrKind::Block(b) | InstrKind::Loop(b) => collect_calls(&b.body, f),
            InstrKind::If(b) => {
                collect_calls(&b.then_body, f);
                if let Some(e) = &b.else_body {
                    collect_calls(e, f);
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::ast::build_ast;
    use crate::cpg::Direction;
    use crate::frontend::{parse_module, ValType};

    const TABLE: &str = r#"(module
      (type $t (func (param f64) (result f64)))
      (func $f (param i32) (result i32) local.get 0)
      (func $g (param i32) (result i32) local.get 0)
      (func $h (param f64) (result f64) local.get 0)
      (func $k (param f64) (result f64) local.get 0)
      (table funcref (elem $f $g $h $f))
      (func $main (result f64) f64.const 1 i32.const 2 call_indirect (type $t)))"#;

    #[test]
    fn index_groups_table_functions_by_signature() {
        let m = parse_module(TABLE).unwrap();
        let idx = build_signature_index(&m);
        let i2i = FuncType { params: vec![ValType::I32], results: vec![ValType::I32] };
        let f2f = FuncType { params: vec![ValType::F64], results: vec![ValType::F64] };
        assert_eq!(idx.get(&i2i), &[0, 1]);
        // $k has the right type but is not in the table.
        assert_eq!(idx.get(&f2f), &[2]);
        assert_eq!(idx.len(), 2);
    }

    #[test]
    fn empty_table_gives_empty_index() {
        let m = parse_module("(module (func))").unwrap();
        assert!(build_signature_index(&m).is_empty());
    }

    #[test]
    fn indirect_call_reaches_matching_entries() {
        let m = parse_module(TABLE).unwrap();
        let mut g = GraphBuilder::new();
        let l = build_ast(&m, &mut g).unwrap();
        let w = build_cg(&m, &l, &build_signature_index(&m), &mut g).unwrap();
        assert!(w.is_empty());
        let g = g.freeze();
        let call = l.functions[4].instructions[2];
        assert_eq!(g.adjacency(call, EdgeType::Cg, Direction::Out), vec![l.functions[2].function]);
    }

    #[test]
    fn indirect_call_without_candidates_warns() {
        let m = parse_module(
            "(module (type $t (func)) (func $main i32.const 0 call_indirect (type $t)))",
        )
        .unwrap();
        let mut g = GraphBuilder::new();
        let l = build_ast(&m, &mut g).unwrap();
        let w = build_cg(&m, &l, &build_signature_index(&m), &mut g).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(g.graph().edges().count(), g.graph().edges().filter(|e| e.ty == EdgeType::Ast).count());
    }
}
