//! Code property graph store: typed nodes and edges with schema-checked
//! property maps.

mod model;
mod property;
mod schema;
mod types;

pub use model::{Cpg, Direction, Edge, EdgeId, Element, GraphBuilder, GraphError, Node, NodeId};
pub use property::{Properties, PropertyValue};
pub use schema::{check_edge, check_node, edge_keys, node_keys, SchemaError};
pub use types::{DdgType, EdgeType, InstType, NodeKind, PropKey, UnknownName};
