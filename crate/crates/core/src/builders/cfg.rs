//! Control flow edges over structured WebAssembly bodies.
//!
//! Layout of the constructs (`→` is a CFG edge):
//! - `block`: pred → BeginBlock → body → Block node → next. The Block node
//!   marks the block's end; branches to the block land on it.
//! - `loop`: pred → BeginBlock → body → Loop node → next. Branches to the
//!   loop land on its BeginBlock, which closes the cycle.
//! - `if`: pred → If; `true` → then body; `false` → Else node → else body,
//!   or straight to the continuation when there is no else. Both arms end
//!   at the continuation, which is also where branches to the if land.
//!
//! Besides the graph edges, each function yields a [`FlowGraph`]: the same
//! edges annotated with the abstract stack effects the dataflow pass needs
//! when control leaves one or more constructs at once.

use std::collections::HashMap;
use std::ops::Range;

use crate::builders::ast::FunctionNodes;
use crate::cpg::{EdgeType, GraphBuilder, NodeId, PropKey, Properties, PropertyValue};
use crate::error::BuildError;
use crate::frontend::opcodes::NumClass;
use crate::frontend::{max_stack_height, ConstValue, FunctionIR, InstrKind, Instruction, LabelRef, ModuleIR};

/// Leaves a construct: `depth` counts open frames from the innermost. The
/// stack is cut back to the target frame's base, keeping the top `keep`
/// values; the target frame itself is removed when `pop_target` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unwind {
    pub depth: u32,
    pub keep: u32,
    pub pop_target: bool,
}

/// Sequence of unwinds applied along one edge, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeEffect(pub Vec<Unwind>);

impl EdgeEffect {
    pub fn none() -> Self {
        EdgeEffect(Vec::new())
    }

    pub fn unwind(depth: u32, keep: u32, pop_target: bool) -> Self {
        EdgeEffect(vec![Unwind { depth, keep, pop_target }])
    }

    pub fn then(mut self, other: &EdgeEffect) -> Self {
        self.0.extend_from_slice(&other.0);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// What the abstract stack of the sets pushed by an instruction contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Push {
    Nothing,
    Empty,
    /// Union of the first `n` popped sets, deepest first.
    Union(u32),
}

/// Abstract operation of a flow node.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowOp {
    Entry,
    /// Else marker; no effect.
    Skip,
    /// Opens a block or loop frame.
    BeginBlock,
    /// Pops `nargs` and opens the if frame.
    IfStart,
    /// End of a block or loop: keep `nresults` and close the frame.
    End { nresults: u32 },
    Const(ConstValue),
    LocalGet(u32),
    LocalSet(u32),
    LocalTee(u32),
    GlobalGet(u32),
    GlobalSet(u32),
    Call { nargs: u32, nresults: u32 },
    /// Needs `nargs` values; only the top `drop` of them are consumed, the
    /// rest travel with the edge effect.
    Branch { nargs: u32, drop: u32 },
    Compute { nargs: u32, push: Push },
}

impl FlowOp {
    /// Values read from the abstract stack.
    pub fn nargs(&self) -> u32 {
        match self {
            FlowOp::IfStart => 1,
            FlowOp::LocalSet(_) | FlowOp::LocalTee(_) | FlowOp::GlobalSet(_) => 1,
            FlowOp::Call { nargs, .. } | FlowOp::Branch { nargs, .. } | FlowOp::Compute { nargs, .. } => *nargs,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNode {
    pub node: NodeId,
    pub op: FlowOp,
    pub succs: Vec<(usize, EdgeEffect)>,
}

/// A loop's body occupies flow indices `body`; `body.start` is its header
/// (the BeginBlock) and `body.end` its Loop end node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopInfo {
    pub body: Range<usize>,
}

impl LoopInfo {
    pub fn header(&self) -> usize {
        self.body.start
    }
}

/// Per-function control flow with stack effects. Index 0 is the entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowGraph {
    pub function: u32,
    pub nodes: Vec<FlowNode>,
    /// Loops in order of their end, so inner loops precede outer ones.
    pub loops: Vec<LoopInfo>,
    pub max_stack: u32,
    pub index: HashMap<NodeId, usize>,
}

impl FlowGraph {
    pub fn flow_index(&self, node: NodeId) -> Option<usize> {
        self.index.get(&node).copied()
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for (s, _) in &n.succs {
                preds[*s].push(i);
            }
        }
        preds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfgLabel {
    Bool(bool),
    Case(u32),
    Default,
}

impl CfgLabel {
    fn rank(label: Option<CfgLabel>) -> u64 {
        match label {
            Some(CfgLabel::Bool(true)) => 0,
            Some(CfgLabel::Case(i)) => i as u64,
            Some(CfgLabel::Default) => u32::MAX as u64 + 1,
            Some(CfgLabel::Bool(false)) | None => u32::MAX as u64 + 2,
        }
    }

    fn property(self) -> PropertyValue {
        match self {
            CfgLabel::Bool(b) => PropertyValue::Bool(b),
            CfgLabel::Case(i) => PropertyValue::Int(i as i64),
            CfgLabel::Default => PropertyValue::Text("default".into()),
        }
    }
}

/// An edge whose target is not known yet.
#[derive(Debug, Clone)]
struct Exit {
    from: NodeId,
    label: Option<CfgLabel>,
    effect: EdgeEffect,
}

impl Exit {
    fn fall(from: NodeId) -> Self {
        Exit { from, label: None, effect: EdgeEffect::none() }
    }
}

enum Frame {
    Block { end: NodeId },
    Loop { header: NodeId },
    If { exits: Vec<Exit> },
}

struct PendingEdge {
    from: NodeId,
    to: NodeId,
    label: Option<CfgLabel>,
    effect: EdgeEffect,
}

struct Builder<'a> {
    module: &'a ModuleIR,
    func: &'a FunctionIR,
    nodes: &'a FunctionNodes,
    order: Vec<(NodeId, FlowOp)>,
    loops: Vec<LoopInfo>,
    edges: Vec<PendingEdge>,
    frames: Vec<Frame>,
}

/// Adds the CFG edges of one function and returns its flow graph.
pub fn build_cfg(
    module: &ModuleIR,
    func: &FunctionIR,
    nodes: &FunctionNodes,
    g: &mut GraphBuilder,
) -> Result<FlowGraph, BuildError> {
    let mut b = Builder { module, func, nodes, order: Vec::new(), loops: Vec::new(), edges: Vec::new(), frames: Vec::new() };
    b.place(nodes.function, FlowOp::Entry);
    if !func.is_import() {
        let exits = b.seq(&func.body, vec![Exit::fall(nodes.function)])?;
        if let Some(ret) = nodes.return_node {
            b.connect(exits, ret);
            b.place(ret, FlowOp::Branch { nargs: 1, drop: 0 });
        }
    }
    b.finish(g)
}

impl Builder<'_> {
    fn place(&mut self, node: NodeId, op: FlowOp) -> usize {
        self.order.push((node, op));
        self.order.len() - 1
    }

    fn connect(&mut self, exits: Vec<Exit>, to: NodeId) {
        for e in exits {
            self.edges.push(PendingEdge { from: e.from, to, label: e.label, effect: e.effect });
        }
    }

    fn seq(&mut self, body: &[Instruction], mut entries: Vec<Exit>) -> Result<Vec<Exit>, BuildError> {
        for inst in body {
            entries = self.instr(inst, entries)?;
        }
        Ok(entries)
    }

    fn instr(&mut self, inst: &Instruction, entries: Vec<Exit>) -> Result<Vec<Exit>, BuildError> {
        let n = self.nodes.node_of(inst);
        match &inst.kind {
            InstrKind::Block(b) | InstrKind::Loop(b) => {
                let is_loop = matches!(inst.kind, InstrKind::Loop(_));
                let begin = self.nodes.begin_blocks[&inst.order];
                self.connect(entries, begin);
                let header = self.place(begin, FlowOp::BeginBlock);
                self.frames.push(if is_loop { Frame::Loop { header: begin } } else { Frame::Block { end: n } });
                let exits = self.seq(&b.body, vec![Exit::fall(begin)])?;
                self.frames.pop();
                self.connect(exits, n);
                let end = self.place(n, FlowOp::End { nresults: b.result.is_some() as u32 });
                if is_loop {
                    self.loops.push(LoopInfo { body: header..end });
                }
                Ok(vec![Exit::fall(n)])
            }
            InstrKind::If(b) => {
                self.connect(entries, n);
                self.place(n, FlowOp::IfStart);
                self.frames.push(Frame::If { exits: Vec::new() });
                let close = EdgeEffect::unwind(0, b.result.is_some() as u32, true);
                let then_entry = Exit { from: n, label: Some(CfgLabel::Bool(true)), effect: EdgeEffect::none() };
                let mut out: Vec<Exit> = self.seq(&b.then_body, vec![then_entry])?;
                let false_exit = Exit { from: n, label: Some(CfgLabel::Bool(false)), effect: EdgeEffect::none() };
                match &b.else_body {
                    Some(body) => {
                        let else_node = self.nodes.else_nodes[&inst.order];
                        self.connect(vec![false_exit], else_node);
                        self.place(else_node, FlowOp::Skip);
                        out.extend(self.seq(body, vec![Exit::fall(else_node)])?);
                    }
                    None => out.push(false_exit),
                }
                for e in &mut out {
                    e.effect = std::mem::take(&mut e.effect).then(&close);
                }
                match self.frames.pop() {
                    Some(Frame::If { exits }) => out.extend(exits),
                    _ => unreachable!("frame stack out of sync"),
                }
                Ok(out)
            }
            _ => {
                self.connect(entries, n);
                let op = self.flow_op(inst);
                self.place(n, op);
                match &inst.kind {
                    InstrKind::Br(l) => {
                        self.branch(n, l, None)?;
                        Ok(vec![])
                    }
                    InstrKind::BrIf(l) => {
                        self.branch(n, l, Some(CfgLabel::Bool(true)))?;
                        Ok(vec![Exit { from: n, label: Some(CfgLabel::Bool(false)), effect: EdgeEffect::none() }])
                    }
                    InstrKind::BrTable { targets, default } => {
                        for (i, t) in targets.iter().enumerate() {
                            self.branch(n, t, Some(CfgLabel::Case(i as u32)))?;
                        }
                        self.branch(n, default, Some(CfgLabel::Default))?;
                        Ok(vec![])
                    }
                    InstrKind::Return | InstrKind::Unreachable => Ok(vec![]),
                    _ => Ok(vec![Exit::fall(n)]),
                }
            }
        }
    }

    fn branch(&mut self, from: NodeId, l: &LabelRef, label: Option<CfgLabel>) -> Result<(), BuildError> {
        let d = l.depth as usize;
        if d == self.frames.len() {
            // Branch to the function body: leaves the function.
            return Ok(());
        }
        if d > self.frames.len() {
            return Err(BuildError::Cfg {
                function: self.func.name.clone(),
                message: format!("unresolved branch label {} (depth {d})", l.name),
            });
        }
        let idx = self.frames.len() - 1 - d;
        let depth = l.depth;
        match &mut self.frames[idx] {
            Frame::Block { end } => {
                let to = *end;
                let effect = EdgeEffect::unwind(depth, l.arity, false);
                self.edges.push(PendingEdge { from, to, label, effect });
            }
            Frame::Loop { header } => {
                let to = *header;
                let effect = EdgeEffect::unwind(depth, 0, true);
                self.edges.push(PendingEdge { from, to, label, effect });
            }
            Frame::If { exits } => {
                exits.push(Exit { from, label, effect: EdgeEffect::unwind(depth, l.arity, true) });
            }
        }
        Ok(())
    }

    fn flow_op(&self, inst: &Instruction) -> FlowOp {
        let compute = |nargs: u32, push: Push| FlowOp::Compute { nargs, push };
        match &inst.kind {
            InstrKind::Const(c) => FlowOp::Const(*c),
            InstrKind::Numeric(op) => match op.class {
                NumClass::Binary | NumClass::Compare => compute(2, Push::Union(2)),
                NumClass::Unary | NumClass::Test | NumClass::Convert => compute(1, Push::Union(1)),
            },
            InstrKind::Drop => compute(1, Push::Nothing),
            InstrKind::Select => compute(3, Push::Union(2)),
            InstrKind::LocalGet(l) => FlowOp::LocalGet(l.index),
            InstrKind::LocalSet(l) => FlowOp::LocalSet(l.index),
            InstrKind::LocalTee(l) => FlowOp::LocalTee(l.index),
            InstrKind::GlobalGet(g) => FlowOp::GlobalGet(g.index),
            InstrKind::GlobalSet(g) => FlowOp::GlobalSet(g.index),
            InstrKind::Load(..) => compute(1, Push::Empty),
            InstrKind::Store(..) => compute(2, Push::Nothing),
            InstrKind::MemorySize => compute(0, Push::Empty),
            InstrKind::MemoryGrow => compute(1, Push::Empty),
            InstrKind::Nop | InstrKind::Unreachable => compute(0, Push::Nothing),
            InstrKind::Br(l) => FlowOp::Branch { nargs: l.arity, drop: 0 },
            InstrKind::BrIf(l) => FlowOp::Branch { nargs: l.arity + 1, drop: 1 },
            InstrKind::BrTable { default, .. } => FlowOp::Branch { nargs: default.arity + 1, drop: 1 },
            InstrKind::Return => FlowOp::Branch { nargs: self.func.results.len() as u32, drop: 0 },
            InstrKind::Call(f) => {
                let (nargs, nresults) = self
                    .module
                    .function(f.index)
                    .map(|c| (c.params.len() as u32, c.results.len() as u32))
                    .unwrap_or_default();
                FlowOp::Call { nargs, nresults }
            }
            InstrKind::CallIndirect { ty, .. } => FlowOp::Call {
                nargs: ty.params.len() as u32 + 1,
                nresults: ty.results.len() as u32,
            },
            InstrKind::Block(_) | InstrKind::Loop(_) | InstrKind::If(_) => unreachable!("containers handled apart"),
        }
    }

    fn finish(self, g: &mut GraphBuilder) -> Result<FlowGraph, BuildError> {
        let mut edges = self.edges;
        edges.sort_by_key(|e| (e.from, CfgLabel::rank(e.label)));
        let index: HashMap<NodeId, usize> = self.order.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
        let mut nodes: Vec<FlowNode> = self
            .order
            .into_iter()
            .map(|(node, op)| FlowNode { node, op, succs: Vec::new() })
            .collect();
        for e in edges {
            let mut props = Properties::new();
            if let Some(l) = e.label {
                props.insert(PropKey::Label, l.property());
            }
            g.add_edge(e.from, e.to, EdgeType::Cfg, props)?;
            nodes[index[&e.from]].succs.push((index[&e.to], e.effect));
        }
        Ok(FlowGraph {
            function: self.func.index,
            nodes,
            loops: self.loops,
            max_stack: max_stack_height(self.module, self.func),
            index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::ast::build_ast;
    use crate::cpg::{Cpg, Direction, InstType};
    use crate::frontend::parse_module;

    fn build(src: &str) -> (Cpg, Vec<FunctionNodes>, Vec<FlowGraph>) {
        let m = parse_module(src).unwrap();
        let mut g = GraphBuilder::new();
        let l = build_ast(&m, &mut g).unwrap();
        let flows = m
            .functions
            .iter()
            .zip(&l.functions)
            .map(|(f, n)| build_cfg(&m, f, n, &mut g).unwrap())
            .collect();
        (g.freeze(), l.functions, flows)
    }

    fn succ_labels(g: &Cpg, n: NodeId) -> Vec<(NodeId, Option<PropertyValue>)> {
        g.out_edges(n, EdgeType::Cfg)
            .iter()
            .map(|e| (g.edge(*e).dst, g.edge(*e).label().cloned()))
            .collect()
    }

    #[test]
    fn straight_line_is_a_chain() {
        let (g, f, _) = build("(module (func i32.const 1 i32.const 2 i32.add drop))");
        let f = &f[0];
        let i = &f.instructions;
        assert_eq!(g.adjacency(f.function, EdgeType::Cfg, Direction::Out), vec![i[0]]);
        for w in i.windows(2) {
            assert_eq!(g.adjacency(w[0], EdgeType::Cfg, Direction::Out), vec![w[1]]);
        }
        assert!(g.out_edges(i[3], EdgeType::Cfg).is_empty());
    }

    #[test]
    fn br_if_true_first_then_false() {
        let (g, f, _) = build(
            "(module (func (param i32) block $b local.get 0 br_if $b nop end))",
        );
        let f = &f[0];
        let (block, br_if, nop) = (f.instructions[0], f.instructions[2], f.instructions[3]);
        assert_eq!(
            succ_labels(&g, br_if),
            vec![(block, Some(PropertyValue::Bool(true))), (nop, Some(PropertyValue::Bool(false)))]
        );
    }

    #[test]
    fn br_table_has_case_and_default_edges() {
        let (g, f, _) = build(
            "(module (func (param i32)
               block $a block $b block $c local.get 0 br_table $a $b $c end end end))",
        );
        let f = &f[0];
        let bt = f.instructions[4];
        let labels: Vec<_> = succ_labels(&g, bt).into_iter().map(|(_, l)| l.unwrap()).collect();
        assert_eq!(
            labels,
            vec![PropertyValue::Int(0), PropertyValue::Int(1), PropertyValue::Text("default".into())]
        );
    }

    #[test]
    fn loop_branch_targets_begin_block() {
        let (g, f, flow) = build("(module (func (param i32) loop $l local.get 0 br_if $l end))");
        let f = &f[0];
        let begin = f.begin_blocks[&0];
        let br_if = f.instructions[2];
        assert_eq!(succ_labels(&g, br_if)[0], (begin, Some(PropertyValue::Bool(true))));
        let flow = &flow[0];
        assert_eq!(flow.loops.len(), 1);
        assert_eq!(flow.nodes[flow.loops[0].header()].node, begin);
        assert_eq!(flow.nodes[flow.loops[0].body.end].node, f.instructions[0]);
    }

    #[test]
    fn if_without_else_false_edge_goes_to_continuation() {
        let (g, f, flow) = build("(module (func (param i32) local.get 0 if nop end nop))");
        let f = &f[0];
        let (iff, then_nop, after) = (f.instructions[1], f.instructions[2], f.instructions[3]);
        assert_eq!(
            succ_labels(&g, iff),
            vec![(then_nop, Some(PropertyValue::Bool(true))), (after, Some(PropertyValue::Bool(false)))]
        );
        let flow = &flow[0];
        let fi = flow.flow_index(iff).unwrap();
        assert_eq!(flow.nodes[fi].succs[1].1, EdgeEffect::unwind(0, 0, true));
    }

    #[test]
    fn if_with_else_routes_false_through_else_node() {
        let (g, f, _) = build(
            "(module (func (param i32) (result i32) local.get 0 if (result i32) i32.const 1 else i32.const 2 end))",
        );
        let f = &f[0];
        let else_node = f.else_nodes[&1];
        assert_eq!(succ_labels(&g, f.instructions[1])[1], (else_node, Some(PropertyValue::Bool(false))));
        let ret = f.return_node.unwrap();
        assert_eq!(g.node(ret).inst_type(), Some(InstType::Return));
        assert_eq!(g.adjacency(ret, EdgeType::Cfg, Direction::In).len(), 2);
    }

    #[test]
    fn dead_code_has_no_incoming_edge() {
        let (g, f, _) = build("(module (func block $b br $b nop end))");
        let f = &f[0];
        let nop = f.instructions[2];
        assert!(g.in_edges(nop, EdgeType::Cfg).is_empty());
        assert_eq!(g.adjacency(nop, EdgeType::Cfg, Direction::Out), vec![f.instructions[0]]);
    }

    #[test]
    fn branch_out_of_nested_if_composes_unwinds() {
        let (_, f, flow) = build(
            "(module (func (param i32)
               local.get 0 if $outer local.get 0 if $inner br $outer end end nop))",
        );
        let f = &f[0];
        let flow = &flow[0];
        let br = flow.flow_index(f.instructions[4]).unwrap();
        let nop = flow.flow_index(f.instructions[5]).unwrap();
        assert_eq!(flow.nodes[br].succs, vec![(nop, EdgeEffect::unwind(1, 0, true))]);
        let inner_if = flow.flow_index(f.instructions[3]).unwrap();
        let expected = EdgeEffect::unwind(0, 0, true).then(&EdgeEffect::unwind(0, 0, true));
        assert_eq!(flow.nodes[inner_if].succs[1], (nop, expected));
    }
}
