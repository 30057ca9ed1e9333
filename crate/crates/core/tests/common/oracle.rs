//! Chaotic-iteration reference for the dataflow fixpoint: sweep every node
//! in index order, join into each successor, repeat until a sweep changes
//! nothing. No worklist, no loop scheduling.

use wasm_cpg::builders::FlowGraph;
use wasm_cpg::ddg::{transfer, State};

pub fn round_robin(flow: &FlowGraph, nglobals: usize, nlocals: usize) -> (Vec<Option<State>>, usize) {
    let n = flow.nodes.len();
    let mut states: Vec<Option<State>> = vec![None; n];
    if n == 0 {
        return (states, 0);
    }
    states[0] = Some(State::initial(nglobals, nlocals));
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for i in 0..n {
            let Some(input) = states[i].clone() else { continue };
            let node = &flow.nodes[i];
            let step = transfer(&node.op, node.node.0, &input).expect("transfer on a validated function");
            for (succ, effect) in &node.succs {
                let mut st = step.out.clone();
                st.apply(effect).expect("edge effect on a validated function");
                let next = match &states[*succ] {
                    None => st,
                    Some(old) => old.join(&st).expect("join on a validated function"),
                };
                if states[*succ].as_ref() != Some(&next) {
                    states[*succ] = Some(next);
                    changed = true;
                }
            }
        }
        if !changed {
            return (states, sweeps);
        }
    }
}
