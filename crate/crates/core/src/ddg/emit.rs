//! Materializes DDG edges from a finished analysis.

use std::collections::BTreeSet;

use crate::builders::cfg::FlowGraph;
use crate::cpg::{DdgType, EdgeType, GraphBuilder, GraphError, InstType, NodeId, PropKey, Properties};

use super::analysis::{Analysis, DataflowError};
use super::transfer::transfer;

/// Label used for the function dependency of an indirect call.
pub const INDIRECT_CALL_LABEL: &str = "$call_indirect";

/// Kind of dependency an origin instruction introduces.
pub fn dependency_kind(inst: InstType) -> Option<DdgType> {
    match inst {
        InstType::Const => Some(DdgType::Const),
        InstType::LocalGet => Some(DdgType::Local),
        InstType::GlobalGet => Some(DdgType::Global),
        InstType::Call | InstType::CallIndirect => Some(DdgType::Function),
        _ => None,
    }
}

/// Edge properties describing the dependency originated by `origin`.
pub fn dependency_properties(g: &GraphBuilder, origin: NodeId) -> Properties {
    let node = g.graph().node(origin);
    let inst = node.inst_type().expect("dependency origins are instructions");
    let kind = dependency_kind(inst).expect("instruction originates a dependency");
    let p = Properties::new().with(PropKey::DdgType, kind.as_str());
    match kind {
        DdgType::Const => {
            let value = node.get(PropKey::Value).expect("const has a value").clone();
            let vt = node.get(PropKey::ValueType).expect("const has a type").clone();
            p.with(PropKey::Label, value.to_string())
                .with(PropKey::ValueType, vt)
                .with(PropKey::Value, value)
        }
        _ => p.with(PropKey::Label, node.label().unwrap_or(INDIRECT_CALL_LABEL)),
    }
}

/// Adds one DDG edge origin → consumer for every dependency a reached
/// instruction consumes. Returns the number of edges added.
pub fn emit_ddg_edges(flow: &FlowGraph, analysis: &Analysis, g: &mut GraphBuilder) -> Result<usize, EmitError> {
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for (i, node) in flow.nodes.iter().enumerate() {
        let Some(input) = &analysis.states[i] else { continue };
        let step = transfer(&node.op, node.node.0, input)
            .map_err(|source| DataflowError { node: node.node, source })?;
        for set in &step.consumed {
            for &o in set.as_slice() {
                edges.insert((NodeId(o), node.node));
            }
        }
    }
    let mut ordered: Vec<(NodeId, NodeId)> = edges.into_iter().collect();
    ordered.sort_by_key(|&(src, dst)| (dst, src));
    for &(src, dst) in &ordered {
        let props = dependency_properties(g, src);
        g.add_edge(src, dst, EdgeType::Ddg, props)?;
    }
    Ok(ordered.len())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmitError {
    #[error(transparent)]
    Dataflow(#[from] DataflowError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
