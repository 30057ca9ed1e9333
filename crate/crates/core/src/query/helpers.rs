//! Derived facts shared by the native detectors and WQL built-ins.

use std::collections::{HashSet, VecDeque};

use crate::cpg::{Cpg, DdgType, EdgeType, InstType, NodeId, NodeKind, PropKey};
use crate::ddg::{dependency_kind, INDIRECT_CALL_LABEL};

/// One dependency of a value: the originating node, its kind and label
/// (variable or callee name, or the constant's text).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dep {
    pub origin: NodeId,
    pub kind: DdgType,
    pub label: String,
}

fn own_dep(g: &Cpg, n: NodeId) -> Option<Dep> {
    let node = g.node(n);
    let kind = dependency_kind(node.inst_type()?)?;
    let label = match kind {
        DdgType::Const => node.get(PropKey::Value)?.to_string(),
        _ => node.label().unwrap_or(INDIRECT_CALL_LABEL).to_string(),
    };
    Some(Dep { origin: n, kind, label })
}

fn in_deps(g: &Cpg, n: NodeId) -> Vec<Dep> {
    g.in_edges(n, EdgeType::Ddg)
        .iter()
        .map(|e| g.edge(*e))
        .filter_map(|e| {
            Some(Dep { origin: e.src, kind: e.ddg_type()?, label: e.label()?.to_string() })
        })
        .collect()
}

/// Dependencies carried by the value that node `n` leaves on the stack,
/// sorted by origin. Empty for nodes that produce no value or whose value
/// comes from linear memory.
pub fn value_deps(g: &Cpg, n: NodeId) -> Vec<Dep> {
    let mut out = value_deps_unsorted(g, n);
    out.sort();
    out.dedup();
    out
}

fn value_deps_unsorted(g: &Cpg, n: NodeId) -> Vec<Dep> {
    let Some(node) = g.try_node(n) else { return Vec::new() };
    let Some(inst) = node.inst_type() else { return Vec::new() };
    match inst {
        InstType::Const => own_dep(g, n).into_iter().collect(),
        InstType::LocalGet | InstType::GlobalGet => {
            let mut v = in_deps(g, n);
            v.extend(own_dep(g, n));
            v
        }
        InstType::Call | InstType::CallIndirect => {
            if node.int(PropKey::NResults).unwrap_or(0) > 0 {
                own_dep(g, n).into_iter().collect()
            } else {
                Vec::new()
            }
        }
        InstType::Load | InstType::MemorySize | InstType::MemoryGrow => Vec::new(),
        InstType::Select => {
            let kids = g.ast_children(n);
            kids.iter().take(2).flat_map(|c| value_deps_unsorted(g, *c)).collect()
        }
        InstType::Block | InstType::Loop => match g.ast_children(n).last() {
            Some(&last) if node.int(PropKey::NResults).unwrap_or(0) > 0 => value_deps_unsorted(g, last),
            _ => Vec::new(),
        },
        InstType::If => {
            let kids = g.ast_children(n);
            let mut v = Vec::new();
            let else_node = kids.last().copied().filter(|k| g.node(*k).kind == NodeKind::Else);
            let then_end = if else_node.is_some() { kids.len().saturating_sub(1) } else { kids.len() };
            if then_end > 1 && else_node.is_some() {
                v.extend(value_deps_unsorted(g, kids[then_end - 1]));
                if let Some(&last) = g.ast_children(else_node.unwrap()).last() {
                    v.extend(value_deps_unsorted(g, last));
                }
            }
            v
        }
        _ => in_deps(g, n),
    }
}

/// Whether `get`, a `local.get` of `var`, can observe the value the local
/// had on function entry: some CFG path from the function node reaches it
/// without passing a `local.set`/`local.tee` of `var`.
pub fn reads_param(g: &Cpg, func: NodeId, get: NodeId, var: &str) -> bool {
    let node = g.node(get);
    if node.inst_type() != Some(InstType::LocalGet) || node.label() != Some(var) {
        return false;
    }
    let kills = |n: NodeId| {
        let node = g.node(n);
        matches!(node.inst_type(), Some(InstType::LocalSet | InstType::LocalTee)) && node.label() == Some(var)
    };
    let mut seen = HashSet::from([func]);
    let mut queue = VecDeque::from([func]);
    while let Some(n) = queue.pop_front() {
        for &e in g.out_edges(n, EdgeType::Cfg) {
            let next = g.edge(e).dst;
            if next == get {
                return true;
            }
            if !kills(next) && seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    false
}

/// Parameter names of a function node, in order.
pub fn params(g: &Cpg, func: NodeId) -> Vec<String> {
    let Some(sig) = g.ast_child(func, 0) else { return Vec::new() };
    let Some(ps) = g.ast_child(sig, 0) else { return Vec::new() };
    g.ast_children(ps).into_iter().filter_map(|v| g.node(v).name().map(str::to_string)).collect()
}

/// Functions targeted by the CG edges of a call node.
pub fn callees(g: &Cpg, call: NodeId) -> Vec<NodeId> {
    let mut v = g.adjacency(call, EdgeType::Cg, crate::cpg::Direction::Out);
    v.sort_unstable();
    v.dedup();
    v
}
