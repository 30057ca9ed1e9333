//! The ten native detectors. Each walks functions in index order and
//! instructions in id order, so output order is deterministic; every
//! detector has a WQL twin under `queries/` that reports the same findings.
//!
//! Edge types read: q2 and q8 only AST; q1, q5, q6, q9 and q10 AST and DDG;
//! q3 and q4 add CFG; q7 reads all four (CFG for parameter entry values, CG
//! for interprocedural hops).

use std::collections::{BTreeSet, VecDeque};

use crate::cpg::{Cpg, DdgType, EdgeType, InstType, NodeId, PropKey, PropertyValue};
use crate::query::{
    ascendants_ast, callees, descendants_ast, descendants_cfg, functions, instructions, params, reaches_ddg,
    reads_param, value_deps, Pred,
};

use super::config::ScanConfig;
use super::finding::Finding;

pub const QUERY_IDS: std::ops::RangeInclusive<u8> = 1..=10;

/// Short name of each detector.
pub fn query_name(id: u8) -> &'static str {
    match id {
        1 => "format-strings",
        2 => "dangerous-functions",
        3 => "use-after-free",
        4 => "double-free",
        5 => "tainted-call-indirect",
        6 => "tainted-func-to-func",
        7 => "tainted-local-to-func",
        8 => "bo-static-buffer",
        9 => "bo-static-buffer-malloc",
        10 => "bo-loops",
        _ => "unknown",
    }
}

/// Runs the enabled detectors and concatenates their findings in id order.
pub fn run_all(g: &Cpg, cfg: &ScanConfig, enabled: &BTreeSet<u8>) -> Vec<Finding> {
    enabled.iter().flat_map(|&id| run_query(g, cfg, id)).collect()
}

pub fn run_query(g: &Cpg, cfg: &ScanConfig, id: u8) -> Vec<Finding> {
    match id {
        1 => q1_format_strings(g, cfg),
        2 => q2_dangerous_functions(g, cfg),
        3 => q3_use_after_free(g, cfg),
        4 => q4_double_free(g, cfg),
        5 => q5_tainted_call_indirect(g, cfg),
        6 => q6_tainted_func_to_func(g, cfg),
        7 => q7_tainted_local_to_func(g, cfg),
        8 => q8_bo_static_buffer(g, cfg),
        9 => q9_bo_static_buffer_malloc(g, cfg),
        10 => q10_bo_loops(g, cfg),
        _ => Vec::new(),
    }
}

struct Ctx<'g> {
    g: &'g Cpg,
}

impl<'g> Ctx<'g> {
    fn inst(&self, n: NodeId) -> Option<InstType> {
        self.g.node(n).inst_type()
    }

    fn label(&self, n: NodeId) -> &'g str {
        self.g.node(n).label().unwrap_or("")
    }

    fn name(&self, f: NodeId) -> String {
        self.g.node(f).name().unwrap_or("").to_string()
    }

    fn opcode(&self, n: NodeId) -> &'g str {
        self.g.node(n).text(PropKey::Opcode).unwrap_or("")
    }

    fn child(&self, n: NodeId, i: usize) -> Option<NodeId> {
        self.g.ast_child(n, i)
    }

    fn child_is(&self, n: NodeId, i: usize, t: InstType) -> Option<NodeId> {
        self.child(n, i).filter(|c| self.inst(*c) == Some(t))
    }

    fn const_int(&self, n: NodeId) -> Option<i64> {
        (self.inst(n) == Some(InstType::Const)).then(|| self.g.node(n).int(PropKey::Value)).flatten()
    }

    fn calls(&self, f: NodeId) -> Vec<NodeId> {
        instructions(self.g, &[f], &Pred::inst_type(InstType::Call)).unwrap_or_default()
    }

    fn all(&self, f: NodeId) -> Vec<NodeId> {
        instructions(self.g, &[f], &Pred::True).unwrap_or_default()
    }

    fn is_call_to(&self, n: NodeId, name: &str) -> bool {
        self.inst(n) == Some(InstType::Call) && self.label(n) == name
    }

    /// Incoming DDG edges of a node, ascending edge id.
    fn ddg_in(&self, n: NodeId) -> impl Iterator<Item = &'g crate::cpg::Edge> + 'g {
        let g = self.g;
        g.in_edges(n, EdgeType::Ddg).iter().map(move |e| g.edge(*e))
    }

    fn has_ddg_in(&self, n: NodeId, kind: DdgType, label: Option<&str>) -> bool {
        self.ddg_in(n)
            .any(|e| e.ddg_type() == Some(kind) && label.is_none_or(|l| e.label_text() == Some(l)))
    }
}

fn finding(q: u8, kind: &str, function: String, label: &str, description: String, nodes: &[NodeId]) -> Finding {
    Finding {
        query: q,
        kind: kind.to_string(),
        function,
        label: label.to_string(),
        description,
        nodes: nodes.iter().map(|n| n.0).collect(),
    }
}

pub fn q1_format_strings(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        for n in c.calls(f) {
            let label = c.label(n);
            let Some(&idx) = cfg.format_functions.get(label) else { continue };
            let Some(arg) = c.child(n, idx) else { continue };
            if !value_deps(g, arg).iter().any(|d| d.kind == DdgType::Const) {
                let desc = format!("format argument {idx} of {label} is not a constant");
                out.push(finding(1, "Format string", c.name(f), label, desc, &[n]));
            }
        }
    }
    out
}

pub fn q2_dangerous_functions(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        for n in c.calls(f) {
            let label = c.label(n);
            if cfg.dangerous_functions.iter().any(|d| d == label) {
                out.push(finding(2, "Dangerous function", c.name(f), label, format!("call to {label}"), &[n]));
            }
        }
    }
    out
}

/// `(alloc call, dealloc call)` pairs where the dealloc executes after the
/// alloc and releases its result.
fn alloc_release_pairs(c: &Ctx, f: NodeId, alloc: &str, dealloc: &str) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for n1 in c.calls(f).into_iter().filter(|n| c.label(*n) == alloc) {
        for n2 in descendants_cfg(c.g, n1) {
            if c.is_call_to(n2, dealloc) && reaches_ddg(c.g, n1, n2, DdgType::Function, alloc) {
                out.push((n1, n2));
            }
        }
    }
    out
}

pub fn q3_use_after_free(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        for (alloc, dealloc) in &cfg.alloc_pairs {
            for (n1, n2) in alloc_release_pairs(&c, f, alloc, dealloc) {
                let uses: Vec<NodeId> = descendants_cfg(g, n2)
                    .into_iter()
                    .filter(|&n| {
                        reaches_ddg(g, n1, n, DdgType::Function, alloc)
                            && !c.is_call_to(n, dealloc)
                            && !ascendants_ast(g, n).iter().any(|a| c.is_call_to(*a, dealloc))
                    })
                    .collect();
                if let Some(&u) = uses.first() {
                    let desc = format!("result of {alloc} used after {dealloc}");
                    out.push(finding(3, "Use after free", c.name(f), dealloc, desc, &[n1, n2, u]));
                }
            }
        }
    }
    out
}

pub fn q4_double_free(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        for (alloc, dealloc) in &cfg.alloc_pairs {
            for (n1, n2) in alloc_release_pairs(&c, f, alloc, dealloc) {
                let again: Vec<NodeId> = descendants_cfg(g, n2)
                    .into_iter()
                    .filter(|&n| c.is_call_to(n, dealloc) && reaches_ddg(g, n1, n, DdgType::Function, alloc))
                    .collect();
                if let Some(&n3) = again.first() {
                    let desc = format!("result of {alloc} released twice by {dealloc}");
                    out.push(finding(4, "Double free", c.name(f), dealloc, desc, &[n1, n2, n3]));
                }
            }
        }
    }
    out
}

pub fn q5_tainted_call_indirect(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        let sites = instructions(g, &[f], &Pred::inst_type(InstType::CallIndirect)).unwrap_or_default();
        for n in sites {
            let Some(&index) = g.ast_children(n).last() else { continue };
            for d in value_deps(g, index) {
                if d.kind == DdgType::Function && cfg.sources.contains(&d.label) {
                    let desc = format!("call_indirect table index depends on {}", d.label);
                    out.push(finding(5, "Tainted call_indirect", c.name(f), &d.label, desc, &[n, d.origin]));
                }
            }
        }
    }
    out
}

pub fn q6_tainted_func_to_func(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        for n in c.calls(f) {
            let label = c.label(n);
            if !cfg.sinks.iter().any(|s| s == label) {
                continue;
            }
            let srcs: Vec<&str> = c
                .ddg_in(n)
                .filter(|e| e.ddg_type() == Some(DdgType::Function))
                .filter_map(|e| e.label_text())
                .filter(|l| cfg.sources.iter().any(|s| s == l))
                .collect();
            if let Some(src) = srcs.first() {
                let desc = format!("{label} depends on the result of {src}");
                out.push(finding(6, "Tainted", c.name(f), label, desc, &[n]));
            }
        }
    }
    out
}

/// Whether `n` has an incoming Local edge for `param` whose origin reads
/// the parameter's entry value.
fn carries_param(c: &Ctx, f: NodeId, n: NodeId, param: &str) -> bool {
    c.ddg_in(n).any(|e| {
        e.ddg_type() == Some(DdgType::Local) && e.label_text() == Some(param) && reads_param(c.g, f, e.src, param)
    })
}

/// Parameters that may hold attacker data: all parameters of exported
/// functions, then callee parameters fed by tainted arguments, up to
/// `depth` call hops.
pub fn tainted_params(g: &Cpg, depth: usize) -> BTreeSet<(NodeId, String)> {
    let c = Ctx { g };
    let mut tainted: BTreeSet<(NodeId, String)> = BTreeSet::new();
    let mut queue: VecDeque<(NodeId, String, usize)> = VecDeque::new();
    for f in functions(g) {
        let node = g.node(f);
        let exported = node.get(PropKey::IsExport) == Some(&PropertyValue::Bool(true));
        let imported = node.get(PropKey::IsImport) == Some(&PropertyValue::Bool(true));
        if exported && !imported {
            for p in params(g, f) {
                tainted.insert((f, p.clone()));
                queue.push_back((f, p, 0));
            }
        }
    }
    while let Some((f, p, d)) = queue.pop_front() {
        if d >= depth {
            continue;
        }
        for n in c.calls(f) {
            for (i, arg) in g.ast_children(n).into_iter().enumerate() {
                let carried = value_deps(g, arg)
                    .iter()
                    .any(|dep| dep.kind == DdgType::Local && dep.label == p && reads_param(g, f, dep.origin, &p));
                if !carried {
                    continue;
                }
                for callee in callees(g, n) {
                    if g.node(callee).get(PropKey::IsImport) == Some(&PropertyValue::Bool(true)) {
                        continue;
                    }
                    if let Some(q) = params(g, callee).into_iter().nth(i) {
                        if tainted.insert((callee, q.clone())) {
                            queue.push_back((callee, q, d + 1));
                        }
                    }
                }
            }
        }
    }
    tainted
}

pub fn q7_tainted_local_to_func(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let tainted = tainted_params(g, cfg.interproc_depth);
    let mut out = Vec::new();
    for f in functions(g) {
        let ps: Vec<String> = params(g, f).into_iter().filter(|p| tainted.contains(&(f, p.clone()))).collect();
        if ps.is_empty() {
            continue;
        }
        for n in c.calls(f) {
            let label = c.label(n);
            if !cfg.sinks.iter().any(|s| s == label) {
                continue;
            }
            if let Some(p) = ps.iter().find(|p| carries_param(&c, f, n, p)) {
                let desc = format!("tainted parameter {p} reaches {label}");
                out.push(finding(7, "Tainted parameter", c.name(f), label, desc, &[n]));
            }
        }
    }
    out
}

/// Stack frame of a function: the local holding the frame pointer and the
/// frame size, from a `fp = sp - N` prologue.
fn frame_of(c: &Ctx, f: NodeId) -> Option<(String, i64)> {
    c.all(f).into_iter().find_map(|n| {
        if !matches!(c.inst(n), Some(InstType::LocalSet | InstType::LocalTee)) {
            return None;
        }
        let sub = c.child(n, 0).filter(|s| c.opcode(*s) == "i32.sub")?;
        c.child_is(sub, 0, InstType::GlobalGet)?;
        let size = c.const_int(c.child(sub, 1)?)?;
        Some((c.label(n).to_string(), size))
    })
}

/// Frame offset addressed by `n`: the frame pointer itself or the frame
/// pointer plus a constant.
fn frame_offset(c: &Ctx, n: NodeId, fp: &str) -> Option<i64> {
    let is_fp = |m: NodeId| c.inst(m) == Some(InstType::LocalGet) && c.label(m) == fp;
    if is_fp(n) {
        return Some(0);
    }
    if c.opcode(n) != "i32.add" {
        return None;
    }
    let (a, b) = (c.child(n, 0)?, c.child(n, 1)?);
    if is_fp(a) {
        c.const_int(b)
    } else if is_fp(b) {
        c.const_int(a)
    } else {
        None
    }
}

/// Distinct frame offsets the function addresses, ascending.
fn frame_slots(c: &Ctx, f: NodeId, fp: &str, size: i64) -> Vec<i64> {
    let mut slots = BTreeSet::new();
    for n in c.all(f) {
        let off = match c.inst(n) {
            Some(InstType::Binary) => frame_offset(c, n, fp).filter(|_| c.opcode(n) == "i32.add"),
            Some(InstType::Call) => fp_argument(c, n, fp),
            Some(InstType::Load | InstType::Store) => c
                .child(n, 0)
                .filter(|a| c.inst(*a) == Some(InstType::LocalGet) && c.label(*a) == fp)
                .and_then(|_| c.g.node(n).int(PropKey::Offset)),
            _ => None,
        };
        if let Some(o) = off.filter(|o| (0..size).contains(o)) {
            slots.insert(o);
        }
    }
    slots.into_iter().collect()
}

/// Offset 0 when the frame pointer is passed directly as a call argument.
fn fp_argument(c: &Ctx, n: NodeId, fp: &str) -> Option<i64> {
    c.g
        .ast_children(n)
        .into_iter()
        .any(|a| c.inst(a) == Some(InstType::LocalGet) && c.label(a) == fp)
        .then_some(0)
}

pub fn q8_bo_static_buffer(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        let Some((fp, size)) = frame_of(&c, f) else { continue };
        let slots = frame_slots(&c, f, &fp, size);
        for n in c.calls(f) {
            let label = c.label(n);
            let Some(args) = cfg.buffer_writers.get(label) else { continue };
            let Some(bytes) = c.child(n, args.size()).and_then(|s| c.const_int(s)) else { continue };
            let Some(off) = c.child(n, args.dst()).and_then(|d| frame_offset(&c, d, &fp)) else { continue };
            if !slots.contains(&off) {
                continue;
            }
            let end = slots.iter().copied().find(|s| *s > off).unwrap_or(size);
            let extent = end - off;
            if bytes > extent {
                let desc = format!("{label} writes {bytes} bytes into a {extent}-byte stack buffer");
                out.push(finding(8, "Stack buffer overflow", c.name(f), label, desc, &[n]));
            }
        }
    }
    out
}

pub fn q9_bo_static_buffer_malloc(g: &Cpg, cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        for n in c.calls(f) {
            let label = c.label(n);
            let Some(args) = cfg.buffer_writers.get(label) else { continue };
            let Some(bytes) = c.child(n, args.size()).and_then(|s| c.const_int(s)) else { continue };
            let Some(dst) = c.child(n, args.dst()) else { continue };
            for d in value_deps(g, dst) {
                if d.kind != DdgType::Function || !cfg.alloc_pairs.contains_key(&d.label) {
                    continue;
                }
                let Some(alloc_size) = c.child(d.origin, 0).and_then(|a| c.const_int(a)) else { continue };
                if bytes > alloc_size {
                    let desc = format!("{label} writes {bytes} bytes into {alloc_size} bytes allocated by {}", d.label);
                    out.push(finding(9, "Heap buffer overflow", c.name(f), label, desc, &[d.origin, n]));
                    break;
                }
            }
        }
    }
    out
}

pub fn q10_bo_loops(g: &Cpg, _cfg: &ScanConfig) -> Vec<Finding> {
    let c = Ctx { g };
    let mut out = Vec::new();
    for f in functions(g) {
        let loops = instructions(g, &[f], &Pred::inst_type(InstType::Loop)).unwrap_or_default();
        for l in loops {
            let body = descendants_ast(g, l);
            let incs = body.iter().copied().filter(|&n| {
                matches!(c.opcode(n), "i32.add" | "i64.add")
                    && c.child_is(n, 0, InstType::LocalGet).is_some()
                    && c.child_is(n, 1, InstType::Const).is_some()
                    && c.has_ddg_in(n, DdgType::Local, Some(c.label(c.child(n, 0).unwrap())))
                    && c.has_ddg_in(n, DdgType::Const, None)
            });
            for inc in incs {
                let var = c.label(c.child(inc, 0).unwrap());
                let store = body
                    .iter()
                    .copied()
                    .find(|&s| c.inst(s) == Some(InstType::Store) && descendants_ast(g, s).contains(&inc));
                let Some(store) = store else { continue };
                let guarded = body.iter().any(|&b| {
                    c.inst(b) == Some(InstType::BrIf)
                        && descendants_ast(g, b).into_iter().any(|d| {
                            c.inst(d) == Some(InstType::Compare) && c.has_ddg_in(d, DdgType::Local, Some(var))
                        })
                });
                if !guarded {
                    let desc = format!("{var} indexes a store in loop {} without a bounds check", c.label(l));
                    out.push(finding(10, "Buffer overflow loop", c.name(f), c.label(l), desc, &[l, inc, store]));
                    break;
                }
            }
        }
    }
    out
}
