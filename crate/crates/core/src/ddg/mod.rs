//! Data dependencies: abstract interpretation of each function body over
//! dependency sets, then one DDG edge per consumed dependency.
//!
//! A dependency is named by the instruction that originates it: constants,
//! `local.get`, `global.get` and calls that return a value. Values loaded
//! from linear memory carry no dependency.

mod analysis;
mod emit;
mod state;
mod transfer;

pub use analysis::{analyze, origin_count, Analysis, DataflowError, Metrics};
pub use emit::{dependency_kind, dependency_properties, emit_ddg_edges, EmitError, INDIRECT_CALL_LABEL};
pub use state::{DepSet, Frame, State, StateError};
pub use transfer::{transfer, Step};
