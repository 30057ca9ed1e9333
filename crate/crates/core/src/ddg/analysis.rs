//! Worklist fixpoint over a function's flow graph.
//!
//! The worklist is a LIFO stack without recursion. A node is re-pushed
//! only when its joined incoming state grew, which subsumes the loop
//! stability check and lets an already stable inner loop be skipped when
//! its enclosing loop iterates again. Successors outside a loop are held
//! back until no member of that loop is waiting, so each loop stabilizes
//! before its exits are explored.

use std::collections::BTreeSet;

use crate::builders::cfg::{FlowGraph, FlowOp};
use crate::cpg::NodeId;

use super::state::{State, StateError};
use super::transfer::transfer;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at node {node}: {source}")]
pub struct DataflowError {
    pub node: NodeId,
    pub source: StateError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    /// Worklist pops in total.
    pub pops: u64,
    /// Pops per flow node.
    pub visits: Vec<u32>,
    /// Size of the state lattice's longest chain for this function:
    /// variable and stack slots times the number of dependency origins.
    pub bound: u64,
}

impl Metrics {
    /// Largest number of times any node was expanded after its first visit.
    pub fn max_reexpansions(&self) -> u64 {
        self.visits.iter().map(|v| v.saturating_sub(1) as u64).max().unwrap_or(0)
    }
}

/// Incoming state per flow node; `None` for nodes never reached.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Analysis {
    pub states: Vec<Option<State>>,
    pub metrics: Metrics,
}

/// Number of instructions that originate a dependency.
pub fn origin_count(flow: &FlowGraph) -> usize {
    flow.nodes
        .iter()
        .filter(|n| match n.op {
            FlowOp::Const(_) | FlowOp::LocalGet(_) | FlowOp::GlobalGet(_) => true,
            FlowOp::Call { nresults, .. } => nresults > 0,
            _ => false,
        })
        .count()
}

/// Loops containing each flow node, outermost first.
fn loop_membership(flow: &FlowGraph) -> Vec<Vec<usize>> {
    let mut member = vec![Vec::new(); flow.nodes.len()];
    for (l, info) in flow.loops.iter().enumerate() {
        for m in &mut member[info.body.clone()] {
            m.push(l);
        }
    }
    for m in &mut member {
        m.sort_by_key(|&l| std::cmp::Reverse(flow.loops[l].body.len()));
    }
    member
}

struct Worklist<'a> {
    stack: Vec<usize>,
    queued: Vec<bool>,
    waiting: Vec<u32>,
    membership: &'a [Vec<usize>],
}

impl Worklist<'_> {
    fn push(&mut self, n: usize) {
        if !self.queued[n] {
            self.queued[n] = true;
            self.stack.push(n);
            for &l in &self.membership[n] {
                self.waiting[l] += 1;
            }
        }
    }

    fn pop(&mut self) -> Option<usize> {
        let n = self.stack.pop()?;
        self.queued[n] = false;
        for &l in &self.membership[n] {
            self.waiting[l] -= 1;
        }
        Some(n)
    }
}

pub fn analyze(flow: &FlowGraph, nglobals: usize, nlocals: usize) -> Result<Analysis, DataflowError> {
    let n = flow.nodes.len();
    let membership = loop_membership(flow);
    let mut states: Vec<Option<State>> = vec![None; n];
    let mut deferred: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); flow.loops.len()];
    let mut wl = Worklist {
        stack: Vec::new(),
        queued: vec![false; n],
        waiting: vec![0; flow.loops.len()],
        membership: &membership,
    };
    let mut metrics = Metrics {
        visits: vec![0; n],
        bound: ((nglobals + nlocals + flow.max_stack as usize) * origin_count(flow)) as u64,
        ..Default::default()
    };
    if n == 0 {
        return Ok(Analysis { states, metrics });
    }
    states[0] = Some(State::initial(nglobals, nlocals));
    wl.push(0);
    while let Some(cur) = wl.pop() {
        metrics.pops += 1;
        metrics.visits[cur] += 1;
        let node = &flow.nodes[cur];
        let err = |source| DataflowError { node: node.node, source };
        let input = states[cur].as_ref().expect("queued nodes have a state");
        let step = transfer(&node.op, node.node.0, input).map_err(err)?;
        for (succ, effect) in &node.succs {
            let mut st = step.out.clone();
            st.apply(effect).map_err(err)?;
            let grew = match &states[*succ] {
                None => true,
                Some(old) if st.is_subset(old) => false,
                Some(old) => {
                    st = old.join(&st).map_err(err)?;
                    true
                }
            };
            if !grew {
                continue;
            }
            states[*succ] = Some(st);
            let exit_of = membership[cur].iter().find(|l| !membership[*succ].contains(l));
            match exit_of {
                Some(&l) => {
                    deferred[l].insert(*succ);
                }
                None => wl.push(*succ),
            }
        }
        for &l in membership[cur].iter().rev() {
            if wl.waiting[l] == 0 && !deferred[l].is_empty() {
                for s in std::mem::take(&mut deferred[l]) {
                    wl.push(s);
                }
            }
        }
    }
    debug_assert!(deferred.iter().all(BTreeSet::is_empty));
    Ok(Analysis { states, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::ast::build_ast;
    use crate::builders::cfg::build_cfg;
    use crate::cpg::GraphBuilder;
    use crate::ddg::state::DepSet;
    use crate::frontend::parse_module;

    fn run(src: &str) -> (FlowGraph, Analysis) {
        let m = parse_module(src).unwrap();
        let mut g = GraphBuilder::new();
        let l = build_ast(&m, &mut g).unwrap();
        let f = m.functions.last().unwrap();
        let flow = build_cfg(&m, f, l.functions.last().unwrap(), &mut g).unwrap();
        let a = analyze(&flow, m.globals.len(), f.local_count()).unwrap();
        (flow, a)
    }

    #[test]
    fn straight_line_visits_each_node_once() {
        let (_, a) = run("(module (func i32.const 1 i32.const 2 i32.add drop))");
        assert!(a.metrics.visits.iter().all(|&v| v == 1));
    }

    #[test]
    fn loop_accumulates_definitions() {
        let (flow, a) = run(
            "(module (func (local $i i32)
               loop $l
                 local.get $i i32.const 1 i32.add local.set $i
                 local.get $i i32.const 10 i32.lt_s br_if $l
               end))",
        );
        let header = flow.loops[0].header();
        let st = a.states[header].as_ref().unwrap();
        // $i at the header: empty on entry, the add's operands after one turn.
        let get_i = flow.nodes[header + 1].node.0;
        let one = flow.nodes[header + 2].node.0;
        assert_eq!(st.locals[0], DepSet::from_iter_unsorted([get_i, one]));
        assert!(a.metrics.max_reexpansions() <= a.metrics.bound);
    }

    #[test]
    fn unreached_code_has_no_state() {
        let (flow, a) = run("(module (func block $b br $b nop end))");
        let nop = flow.nodes.iter().position(|n| matches!(n.op, FlowOp::Compute { nargs: 0, .. })).unwrap();
        assert!(a.states[nop].is_none());
        assert_eq!(a.metrics.visits[nop], 0);
    }
}
