//! Query layer over a frozen graph: traversals, predicates and the derived
//! facts the detectors share.

mod api;
mod helpers;
mod predicate;

pub use api::{
    ascendants_ast, bfs, descendants_ast, descendants_cfg, enclosing_function, functions, instructions,
    reaches_ddg, QueryError,
};
pub use helpers::{callees, params, reads_param, value_deps, Dep};
pub use predicate::{EdgeCond, Pred};
