//! Transfer functions over abstract states.

use crate::builders::cfg::{FlowOp, Push};

use super::state::{DepSet, State, StateError};

/// Result of one transfer: the outgoing state and the dependency sets the
/// instruction consumed. Consumed sets become incoming DDG edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub out: State,
    pub consumed: Vec<DepSet>,
}

/// Applies `op` of the instruction whose node id is `origin` to `input`.
pub fn transfer(op: &FlowOp, origin: u32, input: &State) -> Result<Step, StateError> {
    let mut s = input.clone();
    let mut consumed = Vec::new();
    match op {
        FlowOp::Entry | FlowOp::Skip => {}
        FlowOp::BeginBlock => s.open_frame(),
        FlowOp::IfStart => {
            consumed = s.pop_n(1)?;
            s.open_frame();
        }
        FlowOp::End { nresults } => s.unwind(crate::builders::cfg::Unwind {
            depth: 0,
            keep: *nresults,
            pop_target: true,
        })?,
        FlowOp::Const(_) => s.stack.push(DepSet::single(origin)),
        FlowOp::LocalGet(i) => {
            let v = s.locals.get(*i as usize).ok_or(StateError::UnknownVariable(*i))?.clone();
            s.stack.push(v.with(origin));
            consumed.push(v);
        }
        FlowOp::GlobalGet(i) => {
            let v = s.globals.get(*i as usize).ok_or(StateError::UnknownVariable(*i))?.clone();
            s.stack.push(v.with(origin));
            consumed.push(v);
        }
        FlowOp::LocalSet(i) | FlowOp::LocalTee(i) => {
            let v = s.pop_n(1)?.remove(0);
            *s.locals.get_mut(*i as usize).ok_or(StateError::UnknownVariable(*i))? = v.clone();
            if matches!(op, FlowOp::LocalTee(_)) {
                s.stack.push(v.clone());
            }
            consumed.push(v);
        }
        FlowOp::GlobalSet(i) => {
            let v = s.pop_n(1)?.remove(0);
            *s.globals.get_mut(*i as usize).ok_or(StateError::UnknownVariable(*i))? = v.clone();
            consumed.push(v);
        }
        FlowOp::Call { nargs, nresults } => {
            consumed = s.pop_n(*nargs as usize)?;
            if *nresults > 0 {
                s.stack.push(DepSet::single(origin));
            }
        }
        FlowOp::Branch { nargs, drop } => {
            // Carried values stay put for the edge effect; only the
            // condition or selector is consumed here.
            s.peek_n(*nargs as usize)?;
            consumed = s.pop_n(*drop as usize)?;
        }
        FlowOp::Compute { nargs, push } => {
            consumed = s.pop_n(*nargs as usize)?;
            match push {
                Push::Nothing => {}
                Push::Empty => s.stack.push(DepSet::empty()),
                Push::Union(k) => {
                    let u = consumed[..*k as usize].iter().fold(DepSet::empty(), |acc, d| acc.union(d));
                    s.stack.push(u);
                }
            }
        }
    }
    Ok(Step { out: s, consumed })
}
