//! AST construction: the module/function hierarchy plus folding of flat
//! instruction sequences into operand trees.
//!
//! Node creation order is fixed: the Module node, then per function the
//! Function node, its body instructions in source order (a `block`/`loop`
//! is immediately followed by its BeginBlock node, an `else` keyword creates
//! the Else node), the synthetic Return node, and finally the signature
//! nodes.

use std::collections::HashMap;

use crate::cpg::{EdgeType, GraphBuilder, InstType, NodeId, NodeKind, PropKey, Properties, PropertyValue};
use crate::error::BuildError;
use crate::frontend::opcodes::NumClass;
use crate::frontend::{instruction_arity, ConstValue, FunctionIR, InstrKind, Instruction, ModuleIR, ValType};

/// Mapping from IR instructions to the nodes created for them.
#[derive(Debug, Clone, Default)]
pub struct FunctionNodes {
    pub function: NodeId,
    /// Node of each instruction, indexed by its `order`.
    pub instructions: Vec<NodeId>,
    /// BeginBlock node of each `block`/`loop`, keyed by the container's order.
    pub begin_blocks: HashMap<u32, NodeId>,
    /// Else node of each `if` with an else branch, keyed by the if's order.
    pub else_nodes: HashMap<u32, NodeId>,
    /// Synthetic node marking the value-producing tail expression.
    pub return_node: Option<NodeId>,
    /// Statements directly under the Function node, in order.
    pub statements: Vec<NodeId>,
    pub params: Vec<NodeId>,
    pub locals: Vec<NodeId>,
}

impl FunctionNodes {
    pub fn node_of(&self, inst: &Instruction) -> NodeId {
        self.instructions[inst.order as usize]
    }
}

#[derive(Debug, Clone, Default)]
pub struct AstLowering {
    pub module: NodeId,
    pub functions: Vec<FunctionNodes>,
}

pub fn const_property(c: ConstValue) -> PropertyValue {
    match c {
        ConstValue::I32(v) => PropertyValue::Int(v as i64),
        ConstValue::I64(v) => PropertyValue::Int(v),
        ConstValue::F32(b) => PropertyValue::Float(f32::from_bits(b) as f64),
        ConstValue::F64(b) => PropertyValue::Float(f64::from_bits(b)),
    }
}

/// Instruction type of an IR instruction.
pub fn inst_type(inst: &Instruction) -> InstType {
    match &inst.kind {
        InstrKind::Const(_) => InstType::Const,
        InstrKind::Numeric(op) => match op.class {
            NumClass::Unary => InstType::Unary,
            NumClass::Binary => InstType::Binary,
            NumClass::Compare | NumClass::Test => InstType::Compare,
            NumClass::Convert => InstType::Convert,
        },
        InstrKind::Drop => InstType::Drop,
        InstrKind::Select => InstType::Select,
        InstrKind::LocalGet(_) => InstType::LocalGet,
        InstrKind::LocalSet(_) => InstType::LocalSet,
        InstrKind::LocalTee(_) => InstType::LocalTee,
        InstrKind::GlobalGet(_) => InstType::GlobalGet,
        InstrKind::GlobalSet(_) => InstType::GlobalSet,
        InstrKind::Load(..) => InstType::Load,
        InstrKind::Store(..) => InstType::Store,
        InstrKind::MemorySize => InstType::MemorySize,
        InstrKind::MemoryGrow => InstType::MemoryGrow,
        InstrKind::Nop => InstType::Nop,
        InstrKind::Unreachable => InstType::Unreachable,
        InstrKind::Br(_) => InstType::Br,
        InstrKind::BrIf(_) => InstType::BrIf,
        InstrKind::BrTable { .. } => InstType::BrTable,
        InstrKind::Return => InstType::Return,
        InstrKind::Block(_) => InstType::Block,
        InstrKind::Loop(_) => InstType::Loop,
        InstrKind::If(_) => InstType::If,
        InstrKind::Call(_) => InstType::Call,
        InstrKind::CallIndirect { .. } => InstType::CallIndirect,
    }
}

/// Schema-conformant properties of an instruction node.
pub fn instruction_properties(inst: &Instruction, module: &ModuleIR) -> Properties {
    let p = Properties::new().with(PropKey::InstType, inst_type(inst).as_str());
    match &inst.kind {
        InstrKind::Const(c) => p
            .with(PropKey::ValueType, c.val_type().as_str())
            .with(PropKey::Value, const_property(*c)),
        InstrKind::Numeric(op) => p.with(PropKey::Opcode, op.name),
        InstrKind::LocalGet(l) | InstrKind::LocalSet(l) | InstrKind::LocalTee(l) => {
            p.with(PropKey::Label, l.name.as_str())
        }
        InstrKind::GlobalGet(g) | InstrKind::GlobalSet(g) => p.with(PropKey::Label, g.name.as_str()),
        InstrKind::Load(info, arg) | InstrKind::Store(info, arg) => {
            p.with(PropKey::Offset, arg.offset).with(PropKey::Opcode, info.name)
        }
        InstrKind::Br(l) | InstrKind::BrIf(l) => p.with(PropKey::Label, l.name.as_str()),
        InstrKind::Block(b) | InstrKind::Loop(b) => p
            .with(PropKey::Label, b.label.as_str())
            .with(PropKey::NResults, b.result.is_some() as u32),
        InstrKind::If(b) => p
            .with(PropKey::Label, b.label.as_str())
            .with(PropKey::HasElse, b.else_body.is_some()),
        InstrKind::Call(f) => {
            let (nargs, nresults) = module
                .function(f.index)
                .map(|c| (c.params.len(), c.results.len()))
                .unwrap_or_default();
            p.with(PropKey::Label, f.name.as_str())
                .with(PropKey::NArgs, nargs)
                .with(PropKey::NResults, nresults)
        }
        InstrKind::CallIndirect { ty, .. } => p
            .with(PropKey::NArgs, ty.params.len() + 1)
            .with(PropKey::NResults, ty.results.len()),
        _ => p,
    }
}

fn var_node(g: &mut GraphBuilder, name: Option<&str>, ty: ValType, index: usize) -> Result<NodeId, BuildError> {
    let mut p = Properties::new()
        .with(PropKey::ValueType, ty.as_str())
        .with(PropKey::Index, index);
    if let Some(n) = name {
        p.insert(PropKey::Name, n.into());
    }
    Ok(g.add_node(NodeKind::VarNode, p)?)
}

fn ast_edge(g: &mut GraphBuilder, parent: NodeId, child: NodeId, index: usize) -> Result<(), BuildError> {
    g.add_edge(parent, child, EdgeType::Ast, Properties::new().with(PropKey::ChildIndex, index))?;
    Ok(())
}

/// Builds the AST sub-graph for the whole module.
pub fn build_ast(module: &ModuleIR, g: &mut GraphBuilder) -> Result<AstLowering, BuildError> {
    let name = module.name.clone().unwrap_or_default();
    let module_node = g.add_node(NodeKind::Module, Properties::new().with(PropKey::Name, name))?;
    let mut functions = Vec::with_capacity(module.functions.len());
    for (i, f) in module.functions.iter().enumerate() {
        let nodes = build_function(module, f, g)?;
        ast_edge(g, module_node, nodes.function, i)?;
        functions.push(nodes);
    }
    Ok(AstLowering { module: module_node, functions })
}

fn build_function(module: &ModuleIR, f: &FunctionIR, g: &mut GraphBuilder) -> Result<FunctionNodes, BuildError> {
    let function = g.add_node(
        NodeKind::Function,
        Properties::new()
            .with(PropKey::Name, f.name.as_str())
            .with(PropKey::Index, f.index)
            .with(PropKey::NArgs, f.params.len())
            .with(PropKey::NLocals, f.locals.len())
            .with(PropKey::NResults, f.results.len())
            .with(PropKey::IsImport, f.is_import())
            .with(PropKey::IsExport, f.is_export()),
    )?;
    let mut nodes = FunctionNodes {
        function,
        instructions: vec![NodeId(u32::MAX); f.instruction_count()],
        ..Default::default()
    };
    let mut statements = Vec::new();
    if !f.is_import() {
        let mut folder = Folder { module, func: f, g, nodes: &mut nodes };
        let (rooted, pending) = folder.fold_seq(&f.body, f.results.len())?;
        statements = rooted;
        if let Some(&tail) = pending.last() {
            let ret = g.add_node(
                NodeKind::Instruction,
                Properties::new().with(PropKey::InstType, InstType::Return.as_str()),
            )?;
            ast_edge(g, ret, tail, 0)?;
            nodes.return_node = Some(ret);
            statements.push(ret);
        }
    }
    let signature = g.add_node(NodeKind::FunctionSignature, Properties::new())?;
    let params = g.add_node(NodeKind::Parameters, Properties::new())?;
    for (i, p) in f.params.iter().enumerate() {
        let v = var_node(g, Some(&p.name), p.ty, i)?;
        ast_edge(g, params, v, i)?;
        nodes.params.push(v);
    }
    let locals = g.add_node(NodeKind::Locals, Properties::new())?;
    for (i, l) in f.locals.iter().enumerate() {
        let v = var_node(g, Some(&l.name), l.ty, f.params.len() + i)?;
        ast_edge(g, locals, v, i)?;
        nodes.locals.push(v);
    }
    let results = g.add_node(NodeKind::Results, Properties::new())?;
    for (i, t) in f.results.iter().enumerate() {
        let v = var_node(g, None, *t, i)?;
        ast_edge(g, results, v, i)?;
    }
    ast_edge(g, signature, params, 0)?;
    ast_edge(g, signature, locals, 1)?;
    ast_edge(g, signature, results, 2)?;
    ast_edge(g, function, signature, 0)?;
    for (i, s) in statements.iter().enumerate() {
        ast_edge(g, function, *s, i + 1)?;
    }
    nodes.statements = statements;
    Ok(nodes)
}

struct Folder<'a> {
    module: &'a ModuleIR,
    func: &'a FunctionIR,
    g: &'a mut GraphBuilder,
    nodes: &'a mut FunctionNodes,
}

impl Folder<'_> {
    fn fold_error(&self, message: String) -> BuildError {
        BuildError::Fold { function: self.func.name.clone(), message }
    }

    /// Folds one sequence with a fresh frame. Returns the rooted statements
    /// and the values left pending at its end (the sequence's results).
    fn fold_seq(&mut self, seq: &[Instruction], expected: usize) -> Result<(Vec<NodeId>, Vec<NodeId>), BuildError> {
        let mut pending: Vec<NodeId> = Vec::new();
        let mut rooted: Vec<NodeId> = Vec::new();
        let mut dead = false;
        for inst in seq {
            let node = self
                .g
                .add_node(NodeKind::Instruction, instruction_properties(inst, self.module))?;
            self.nodes.instructions[inst.order as usize] = node;
            let arity = instruction_arity(inst, self.module, self.func).map_err(|e| self.fold_error(e.to_string()))?;
            let take = |pending: &mut Vec<NodeId>, n: usize, this: &Self| -> Result<Vec<NodeId>, BuildError> {
                if pending.len() < n && !dead {
                    return Err(this.fold_error(format!(
                        "stack underflow at `{}`: needs {n}, has {}",
                        inst.mnemonic(),
                        pending.len()
                    )));
                }
                let at = pending.len().saturating_sub(n);
                Ok(pending.split_off(at))
            };
            let mut children = Vec::new();
            match &inst.kind {
                InstrKind::Block(b) | InstrKind::Loop(b) => {
                    let begin = self.g.add_node(
                        NodeKind::Instruction,
                        Properties::new()
                            .with(PropKey::InstType, InstType::BeginBlock.as_str())
                            .with(PropKey::Label, b.label.as_str()),
                    )?;
                    self.nodes.begin_blocks.insert(inst.order, begin);
                    let (r, p) = self.fold_seq(&b.body, b.result.is_some() as usize)?;
                    children.push(begin);
                    children.extend(r);
                    children.extend(p);
                }
                InstrKind::If(b) => {
                    children.extend(take(&mut pending, 1, self)?);
                    let expected = b.result.is_some() as usize;
                    let (r, p) = self.fold_seq(&b.then_body, expected)?;
                    children.extend(r);
                    children.extend(p);
                    if let Some(else_body) = &b.else_body {
                        let else_node = self.g.add_node(NodeKind::Else, Properties::new())?;
                        self.nodes.else_nodes.insert(inst.order, else_node);
                        let (r, p) = self.fold_seq(else_body, expected)?;
                        for (i, c) in r.iter().chain(&p).enumerate() {
                            ast_edge(self.g, else_node, *c, i)?;
                        }
                        children.push(else_node);
                    }
                }
                _ => children = take(&mut pending, arity.nargs as usize, self)?,
            }
            for (i, c) in children.iter().enumerate() {
                ast_edge(self.g, node, *c, i)?;
            }
            if arity.nresults == 0 {
                rooted.push(node);
            } else {
                pending.push(node);
            }
            if inst.is_unconditional_transfer() && !dead {
                // Values stranded below the transfer stay in the tree as
                // statements, ahead of the transfer itself.
                let transfer = rooted.pop();
                rooted.append(&mut pending);
                rooted.extend(transfer);
                dead = true;
            }
        }
        if pending.len() > expected {
            return Err(self.fold_error(format!(
                "{} values left pending at end of sequence, expected {expected}",
                pending.len()
            )));
        }
        if pending.len() < expected && !dead {
            return Err(self.fold_error(format!(
                "sequence produces {} values, expected {expected}",
                pending.len()
            )));
        }
        Ok((rooted, pending))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::{Cpg, Direction};
    use crate::frontend::parse_module;

    fn build(src: &str) -> (Cpg, AstLowering) {
        let m = parse_module(src).unwrap();
        let mut g = GraphBuilder::new();
        let l = build_ast(&m, &mut g).unwrap();
        (g.freeze(), l)
    }

    fn describe(g: &Cpg, n: NodeId) -> String {
        let node = g.node(n);
        let t = node.inst_type().map(|t| t.to_string()).unwrap_or(node.kind.to_string());
        let extra = node
            .get(PropKey::Label)
            .or(node.get(PropKey::Opcode))
            .or(node.get(PropKey::Value))
            .map(|v| format!(" {v}"))
            .unwrap_or_default();
        format!("{t}{extra}")
    }

    #[test]
    fn add_gets_both_operands_in_order() {
        let (g, l) = build("(module (func (param $i i32) (result i32) local.get $i i32.const 1 i32.add))");
        let f = &l.functions[0];
        let add = f.instructions[2];
        let kids: Vec<String> = g.ast_children(add).iter().map(|c| describe(&g, *c)).collect();
        assert_eq!(kids, ["LocalGet $i", "Const 1"]);
        assert_eq!(g.ast_parent(add), f.return_node);
    }

    #[test]
    fn nop_is_rooted_without_children() {
        let (g, l) = build("(module (func nop))");
        let f = &l.functions[0];
        assert_eq!(f.statements, vec![f.instructions[0]]);
        assert!(g.ast_children(f.instructions[0]).is_empty());
    }

    #[test]
    fn import_has_no_body() {
        let (g, l) = build(r#"(module (import "env" "f" (func $f (param i32))))"#);
        let f = &l.functions[0];
        assert_eq!(g.node(f.function).get(PropKey::IsImport), Some(&PropertyValue::Bool(true)));
        let kids = g.adjacency(f.function, EdgeType::Ast, Direction::Out);
        assert_eq!(kids.len(), 1);
        assert_eq!(g.node(kids[0]).kind, NodeKind::FunctionSignature);
    }

    #[test]
    fn if_layout_condition_then_else() {
        let (g, l) = build(
            "(module (func (param i32) (result i32)
               local.get 0
               if (result i32) i32.const 1 else i32.const 2 end))",
        );
        let f = &l.functions[0];
        let iff = f.instructions[1];
        let kids: Vec<String> = g.ast_children(iff).iter().map(|c| describe(&g, *c)).collect();
        assert_eq!(kids, ["LocalGet $0", "Const 1", "Else"]);
        let else_node = f.else_nodes[&1];
        assert_eq!(describe(&g, g.ast_children(else_node)[0]), "Const 2");
    }

    #[test]
    fn store_child_zero_is_address() {
        let (g, l) = build(
            "(module (memory 1) (func (param $p i32) (param $v i32)
               local.get $p i32.const 4 i32.add local.get $v i32.store))",
        );
        let f = &l.functions[0];
        let store = f.instructions[4];
        assert_eq!(describe(&g, g.ast_child(store, 0).unwrap()), "Binary i32.add");
        assert_eq!(describe(&g, g.ast_child(store, 1).unwrap()), "LocalGet $v");
    }

    #[test]
    fn block_children_start_with_begin_block() {
        let (g, l) = build("(module (func block $b nop br $b end))");
        let f = &l.functions[0];
        let blk = f.instructions[0];
        let kids: Vec<String> = g.ast_children(blk).iter().map(|c| describe(&g, *c)).collect();
        assert_eq!(kids, ["BeginBlock $b", "Nop", "Br $b"]);
        assert_eq!(f.begin_blocks[&0], NodeId(blk.0 + 1));
    }

    #[test]
    fn dead_code_folds_with_partial_operands() {
        let (g, l) = build("(module (func (result i32) unreachable i32.const 1 i32.add))");
        let f = &l.functions[0];
        let add = f.instructions[2];
        assert_eq!(g.ast_children(add).len(), 1);
    }
}
