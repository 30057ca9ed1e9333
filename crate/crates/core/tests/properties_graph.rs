//! Structural invariants of the frontend, the graph model and the AST, CFG
//! and CG passes, checked on random well-typed functions.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_cpg::builders::{build_from_wat, build_signature_index, Built, FunctionNodes};
use wasm_cpg::cpg::{edge_keys, node_keys, Cpg, EdgeType, InstType, NodeId, NodeKind};
use wasm_cpg::frontend::{
    instruction_arity, parse_module, print_module, FunctionIR, InstrKind, Instruction, ModuleIR,
};
use wasm_cpg::query::{descendants_ast, descendants_cfg};

fn random_module(seed: u64) -> (String, ModuleIR, Built) {
    let wat = common::gen::random_function_module(&mut ChaCha8Rng::seed_from_u64(seed), 60, 3);
    let (m, b) = build_from_wat(&wat).unwrap_or_else(|e| panic!("{e}\n{wat}"));
    (wat, m, b)
}

fn defined(m: &ModuleIR) -> impl Iterator<Item = &FunctionIR> {
    m.functions.iter().filter(|f| !f.is_import())
}

fn walk<'a>(seq: &'a [Instruction], out: &mut Vec<&'a Instruction>) {
    for inst in seq {
        out.push(inst);
        match &inst.kind {
            InstrKind::Block(b) | InstrKind::Loop(b) => walk(&b.body, out),
            InstrKind::If(b) => {
                walk(&b.then_body, out);
                walk(b.else_body.as_deref().unwrap_or_default(), out);
            }
            _ => {}
        }
    }
}

fn is_container(inst: &Instruction) -> bool {
    matches!(inst.kind, InstrKind::Block(_) | InstrKind::Loop(_) | InstrKind::If(_))
}

fn is_terminator(inst: &Instruction) -> bool {
    matches!(inst.kind, InstrKind::Br(_) | InstrKind::BrTable { .. } | InstrKind::Return | InstrKind::Unreachable)
}

/// Runs the stack height through `seq` starting at zero. Returns the lowest
/// height seen and the final height, or `None` when the sequence ends in
/// dead code (where the stack is polymorphic).
fn stack_walk(m: &ModuleIR, f: &FunctionIR, seq: &[Instruction]) -> (i64, Option<i64>) {
    let mut h: i64 = 0;
    let mut low = 0;
    for inst in seq {
        match &inst.kind {
            InstrKind::Block(b) | InstrKind::Loop(b) => {
                let (l, end) = stack_walk(m, f, &b.body);
                low = low.min(l);
                assert!(end.is_none_or(|e| e == i64::from(b.result.is_some())), "block body ends at {end:?}");
            }
            InstrKind::If(b) => {
                for arm in [Some(&b.then_body), b.else_body.as_ref()].into_iter().flatten() {
                    let (l, end) = stack_walk(m, f, arm);
                    low = low.min(l);
                    assert!(end.is_none_or(|e| e == i64::from(b.result.is_some())));
                }
            }
            _ => {}
        }
        let a = instruction_arity(inst, m, f).expect("arity");
        h -= i64::from(a.nargs);
        low = low.min(h);
        h += i64::from(a.nresults);
        if is_terminator(inst) {
            return (low, None);
        }
    }
    (low, Some(h))
}

/// Instructions reachable when control enters the body, tracked by hand:
/// a block's end is live when its body falls through or a live branch
/// targets it; code after an unconditional transfer is dead.
struct Liveness<'a> {
    nodes: &'a FunctionNodes,
    live: BTreeMap<NodeId, bool>,
    frames: Vec<bool>,
}

impl Liveness<'_> {
    fn target(&mut self, depth: u32) {
        let n = self.frames.len();
        if let Some(slot) = (depth as usize).checked_add(1).and_then(|d| n.checked_sub(d)) {
            self.frames[slot] = true;
        }
    }

    /// Returns whether control falls off the end of `seq`.
    fn seq(&mut self, seq: &[Instruction], mut live: bool) -> bool {
        for inst in seq {
            let node = self.nodes.node_of(inst);
            match &inst.kind {
                InstrKind::Block(b) => {
                    self.live.insert(self.nodes.begin_blocks[&inst.order], live);
                    self.frames.push(false);
                    let ft = self.seq(&b.body, live);
                    let targeted = self.frames.pop().unwrap();
                    live = ft || targeted;
                    self.live.insert(node, live);
                }
                InstrKind::Loop(b) => {
                    self.live.insert(self.nodes.begin_blocks[&inst.order], live);
                    // Branches to a loop go back to its start.
                    self.frames.push(false);
                    live = self.seq(&b.body, live);
                    self.frames.pop();
                    self.live.insert(node, live);
                }
                InstrKind::If(b) => {
                    self.live.insert(node, live);
                    self.frames.push(false);
                    let then_ft = self.seq(&b.then_body, live);
                    let else_ft = match &b.else_body {
                        Some(e) => {
                            self.live.insert(self.nodes.else_nodes[&inst.order], live);
                            self.seq(e, live)
                        }
                        None => live,
                    };
                    let targeted = self.frames.pop().unwrap();
                    live = then_ft || else_ft || targeted;
                }
                kind => {
                    self.live.insert(node, live);
                    if live {
                        match kind {
                            InstrKind::Br(l) | InstrKind::BrIf(l) => self.target(l.depth),
                            InstrKind::BrTable { targets, default } => {
                                for l in targets.iter().chain([default]) {
                                    self.target(l.depth);
                                }
                            }
                            _ => {}
                        }
                    }
                    if is_terminator(inst) {
                        live = false;
                    }
                }
            }
        }
        live
    }
}

fn function_nodes<'a>(b: &'a Built, f: &FunctionIR) -> &'a FunctionNodes {
    &b.lowering.functions[f.index as usize]
}

fn cfg_out(g: &Cpg, n: NodeId) -> usize {
    g.out_edges(n, EdgeType::Cfg).len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stack_effect_never_underflows_and_ends_at_results(seed in any::<u64>()) {
        let (_, m, _) = random_module(seed);
        for f in defined(&m) {
            let (low, end) = stack_walk(&m, f, &f.body);
            prop_assert!(low >= 0, "{}: stack went to {low}", f.name);
            prop_assert!(end.is_none_or(|e| e == f.results.len() as i64), "{}: ends at {end:?}", f.name);
        }
    }

    #[test]
    fn printed_modules_parse_back_unchanged(seed in any::<u64>()) {
        let (_, m, _) = random_module(seed);
        let again = parse_module(&print_module(&m)).unwrap();
        prop_assert_eq!(again, m);
    }

    #[test]
    fn edge_types_partition_the_edge_set(seed in any::<u64>()) {
        let (_, _, b) = random_module(seed);
        let g = &b.cpg;
        let mut total = 0;
        for ty in EdgeType::ALL.iter().copied() {
            let by_filter: BTreeSet<u32> = g.edges().filter(|e| e.ty == ty).map(|e| e.id.0).collect();
            let by_index: BTreeSet<u32> = g.nodes().flat_map(|n| g.out_edges(n.id, ty).iter().map(|e| e.0)).collect();
            prop_assert_eq!(&by_filter, &by_index);
            total += by_filter.len();
        }
        prop_assert_eq!(total, g.edge_count());
        for e in g.edges() {
            prop_assert!(g.try_node(e.src).is_some() && g.try_node(e.dst).is_some());
        }
    }

    #[test]
    fn instruction_ast_is_a_forest(seed in any::<u64>()) {
        let (_, _, b) = random_module(seed);
        let g = &b.cpg;
        for n in g.nodes().filter(|n| n.kind == NodeKind::Instruction) {
            prop_assert!(g.in_edges(n.id, EdgeType::Ast).len() <= 1, "node {} has several AST parents", n.id);
        }
    }

    #[test]
    fn properties_follow_the_schema(seed in any::<u64>()) {
        let (_, _, b) = random_module(seed);
        let g = &b.cpg;
        for n in g.nodes() {
            let (required, optional) = node_keys(n.kind, n.inst_type());
            for k in required {
                prop_assert!(n.get(*k).is_some(), "node {} lacks {k}", n.id);
            }
            for k in n.props().keys() {
                prop_assert!(required.contains(&k) || optional.contains(&k), "node {} has stray {k}", n.id);
            }
        }
        for e in g.edges() {
            let (required, optional) = edge_keys(e.ty, e.ddg_type());
            for k in required {
                prop_assert!(e.get(*k).is_some(), "edge {} lacks {k}", e.id);
            }
            for k in e.props().keys() {
                prop_assert!(required.contains(&k) || optional.contains(&k), "edge {} has stray {k}", e.id);
            }
        }
    }

    #[test]
    fn operand_edges_match_arity(seed in any::<u64>()) {
        let (wat, m, b) = random_module(seed);
        let g = &b.cpg;
        for f in defined(&m) {
            let nodes = function_nodes(&b, f);
            let mut insts = Vec::new();
            walk(&f.body, &mut insts);
            // Operands are only folded into live instructions.
            let mut lv = Liveness { nodes, live: BTreeMap::new(), frames: vec![false] };
            lv.seq(&f.body, true);
            let (mut edges, mut nargs) = (0, 0);
            for inst in insts.iter().filter(|i| !is_container(i) && lv.live[&nodes.node_of(i)]) {
                let a = instruction_arity(inst, &m, f).unwrap();
                let got = g.out_edges(nodes.node_of(inst), EdgeType::Ast).len();
                prop_assert_eq!(got, a.nargs as usize, "{} in\n{}", inst.mnemonic(), wat);
                edges += got;
                nargs += a.nargs as usize;
            }
            prop_assert_eq!(edges, nargs);
        }
    }

    #[test]
    fn instructions_hang_off_their_function(seed in any::<u64>()) {
        let (_, m, b) = random_module(seed);
        for f in defined(&m) {
            let nodes = function_nodes(&b, f);
            let below: BTreeSet<NodeId> = descendants_ast(&b.cpg, nodes.function).into_iter().collect();
            for n in &nodes.instructions {
                prop_assert!(below.contains(n), "instruction {n} not under {}", f.name);
            }
        }
    }

    #[test]
    fn cfg_out_degrees(seed in any::<u64>()) {
        let (wat, m, b) = random_module(seed);
        let g = &b.cpg;
        let mut checked = BTreeSet::new();
        for f in defined(&m) {
            let nodes = function_nodes(&b, f);
            let mut insts = Vec::new();
            walk(&f.body, &mut insts);
            for inst in insts {
                let n = nodes.node_of(inst);
                let d = cfg_out(g, n);
                match &inst.kind {
                    InstrKind::If(_) | InstrKind::BrIf(_) => prop_assert_eq!(d, 2, "{} in\n{}", inst.mnemonic(), wat),
                    InstrKind::BrTable { targets, .. } => prop_assert_eq!(d, targets.len() + 1, "br_table in\n{}", wat),
                    _ => prop_assert!(d <= 1, "{} has {} CFG successors", inst.mnemonic(), d),
                }
                checked.insert(n);
            }
        }
        // Synthetic nodes: block starts, else markers, the function entry.
        for n in g.nodes().filter(|n| !checked.contains(&n.id)) {
            prop_assert!(cfg_out(g, n.id) <= 1, "node {} has {} CFG successors", n.id, cfg_out(g, n.id));
        }
    }

    #[test]
    fn live_code_is_cfg_reachable(seed in any::<u64>()) {
        let (wat, m, b) = random_module(seed);
        let g = &b.cpg;
        for f in defined(&m) {
            let nodes = function_nodes(&b, f);
            let mut lv = Liveness { nodes, live: BTreeMap::new(), frames: vec![false] };
            lv.seq(&f.body, true);
            let reached: BTreeSet<NodeId> = descendants_cfg(g, nodes.function).into_iter().collect();
            for (n, live) in &lv.live {
                prop_assert_eq!(reached.contains(n), *live, "node {} in\n{}", n, wat);
                if *live && !matches!(g.node(*n).inst_type(), Some(InstType::Return | InstType::Unreachable)) {
                    prop_assert!(cfg_out(g, *n) >= 1, "live node {} has no successor in\n{}", n, wat);
                }
            }
        }
    }

    #[test]
    fn cfg_size_is_linear(seed in any::<u64>()) {
        let (_, m, b) = random_module(seed);
        let g = &b.cpg;
        for f in defined(&m) {
            let nodes = function_nodes(&b, f);
            let mut insts = Vec::new();
            walk(&f.body, &mut insts);
            let cases: usize = insts
                .iter()
                .map(|i| match &i.kind {
                    InstrKind::BrTable { targets, .. } => targets.len(),
                    _ => 0,
                })
                .sum();
            let members: BTreeSet<NodeId> = descendants_ast(g, nodes.function).into_iter().chain([nodes.function]).collect();
            let in_cfg: Vec<NodeId> = members.iter().copied().filter(|n| {
                !g.out_edges(*n, EdgeType::Cfg).is_empty() || !g.in_edges(*n, EdgeType::Cfg).is_empty()
            }).collect();
            let two_way = in_cfg.iter().filter(|n| matches!(g.node(**n).inst_type(), Some(InstType::If | InstType::BrIf))).count();
            let edges: usize = in_cfg.iter().map(|n| cfg_out(g, *n)).sum();
            prop_assert!(edges <= in_cfg.len() + two_way + cases, "{edges} CFG edges over {} nodes", in_cfg.len());
        }
    }

    #[test]
    fn call_graph_degrees(seed in any::<u64>()) {
        let (_, m, b) = random_module(seed);
        let index = build_signature_index(&m);
        for f in defined(&m) {
            let nodes = function_nodes(&b, f);
            let mut insts = Vec::new();
            walk(&f.body, &mut insts);
            for inst in insts {
                let d = b.cpg.out_edges(nodes.node_of(inst), EdgeType::Cg).len();
                match &inst.kind {
                    InstrKind::Call(_) => prop_assert_eq!(d, 1),
                    InstrKind::CallIndirect { ty, .. } => prop_assert_eq!(d, index.get(ty).len()),
                    _ => prop_assert_eq!(d, 0),
                }
            }
        }
    }
}

#[test]
fn corpus_call_graph_degrees() {
    for path in common::all_fixture_paths() {
        let (m, b) = common::build(&path);
        let index = build_signature_index(&m);
        for f in defined(&m) {
            let mut insts = Vec::new();
            walk(&f.body, &mut insts);
            for inst in insts {
                let d = b.cpg.out_edges(function_nodes(&b, f).node_of(inst), EdgeType::Cg).len();
                match &inst.kind {
                    InstrKind::Call(_) => assert_eq!(d, 1, "{path}"),
                    InstrKind::CallIndirect { ty, .. } => assert_eq!(d, index.get(ty).len(), "{path}"),
                    _ => {}
                }
            }
        }
    }
}
