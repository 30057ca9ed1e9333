//! Read-only traversals over a frozen graph. Every function returning a
//! node set yields ascending, duplicate-free ids.

use std::collections::{HashSet, VecDeque};

use crate::cpg::{Cpg, DdgType, Direction, EdgeType, NodeId, NodeKind};

use super::predicate::{incident, EdgeCond, Pred};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("node {0} is not a function")]
    NotAFunction(NodeId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
}

/// All Function nodes, in function index order.
pub fn functions(g: &Cpg) -> Vec<NodeId> {
    g.nodes().filter(|n| n.kind == NodeKind::Function).map(|n| n.id).collect()
}

/// Instruction nodes under the given functions that satisfy `pred`.
pub fn instructions(g: &Cpg, funcs: &[NodeId], pred: &Pred) -> Result<Vec<NodeId>, QueryError> {
    let mut out = Vec::new();
    for &f in funcs {
        let node = g.try_node(f).ok_or(QueryError::UnknownNode(f))?;
        if node.kind != NodeKind::Function {
            return Err(QueryError::NotAFunction(f));
        }
        let all = bfs(g, &[f], &Pred::Kind(NodeKind::Instruction).and(pred.clone()), &EdgeCond::of_type(EdgeType::Ast), Direction::Out, None);
        out.extend(all);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Breadth-first search from `start` along edges satisfying `cond` in
/// direction `dir`. Collects the visited nodes other than the start nodes
/// that satisfy `pred`, stopping once `limit` nodes have been collected.
/// Start nodes are never reported, even when a cycle leads back to them.
pub fn bfs(
    g: &Cpg,
    start: &[NodeId],
    pred: &Pred,
    cond: &EdgeCond,
    dir: Direction,
    limit: Option<usize>,
) -> Vec<NodeId> {
    let mut seen: HashSet<NodeId> = start.iter().copied().collect();
    let mut queue: VecDeque<NodeId> = start.iter().copied().filter(|n| g.try_node(*n).is_some()).collect();
    let mut out = Vec::new();
    'outer: while let Some(n) = queue.pop_front() {
        for e in incident(g, n, dir, cond.ty) {
            let edge = g.edge(e);
            if !cond.matches(edge) {
                continue;
            }
            let next = match dir {
                Direction::Out => edge.dst,
                Direction::In => edge.src,
            };
            if !seen.insert(next) {
                continue;
            }
            queue.push_back(next);
            if pred.eval(g, next) {
                out.push(next);
                if limit.is_some_and(|l| out.len() >= l) {
                    break 'outer;
                }
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn descendants_cfg(g: &Cpg, n: NodeId) -> Vec<NodeId> {
    bfs(g, &[n], &Pred::True, &EdgeCond::of_type(EdgeType::Cfg), Direction::Out, None)
}

pub fn descendants_ast(g: &Cpg, n: NodeId) -> Vec<NodeId> {
    bfs(g, &[n], &Pred::True, &EdgeCond::of_type(EdgeType::Ast), Direction::Out, None)
}

pub fn ascendants_ast(g: &Cpg, n: NodeId) -> Vec<NodeId> {
    bfs(g, &[n], &Pred::True, &EdgeCond::of_type(EdgeType::Ast), Direction::In, None)
}

/// Whether a non-empty path `src → … → dst` exists using only DDG edges of
/// the given kind and label.
pub fn reaches_ddg(g: &Cpg, src: NodeId, dst: NodeId, ddg_type: DdgType, label: &str) -> bool {
    let cond = EdgeCond::ddg(ddg_type, Some(label));
    let mut seen: HashSet<NodeId> = HashSet::new();
    let mut queue = VecDeque::from([src]);
    while let Some(n) = queue.pop_front() {
        for &e in g.out_edges(n, EdgeType::Ddg) {
            let edge = g.edge(e);
            if !cond.matches(edge) {
                continue;
            }
            if edge.dst == dst {
                return true;
            }
            if seen.insert(edge.dst) {
                queue.push_back(edge.dst);
            }
        }
    }
    false
}

/// Function node enclosing `n` (or `n` itself when it is a function).
pub fn enclosing_function(g: &Cpg, n: NodeId) -> Option<NodeId> {
    let mut cur = n;
    loop {
        if g.try_node(cur)?.kind == NodeKind::Function {
            return Some(cur);
        }
        cur = g.ast_parent(cur)?;
    }
}
