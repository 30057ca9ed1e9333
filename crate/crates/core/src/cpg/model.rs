//! The property graph: nodes, typed edges and per-type adjacency.

use std::fmt;

use super::property::{Properties, PropertyValue};
use super::schema::{check_edge, check_node, SchemaError};
use super::types::{DdgType, EdgeType, InstType, NodeKind, PropKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    inst_type: Option<InstType>,
    props: Properties,
}

impl Node {
    pub fn inst_type(&self) -> Option<InstType> {
        self.inst_type
    }

    pub fn is_instruction(&self) -> bool {
        self.kind == NodeKind::Instruction
    }

    pub fn props(&self) -> &Properties {
        &self.props
    }

    pub fn get(&self, key: PropKey) -> Option<&PropertyValue> {
        self.props.get(key)
    }

    pub fn text(&self, key: PropKey) -> Option<&str> {
        self.props.get(key).and_then(PropertyValue::as_str)
    }

    pub fn int(&self, key: PropKey) -> Option<i64> {
        self.props.get(key).and_then(PropertyValue::as_int)
    }

    pub fn label(&self) -> Option<&str> {
        self.text(PropKey::Label)
    }

    pub fn name(&self) -> Option<&str> {
        self.text(PropKey::Name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub ty: EdgeType,
    ddg_type: Option<DdgType>,
    props: Properties,
}

impl Edge {
    pub fn ddg_type(&self) -> Option<DdgType> {
        self.ddg_type
    }

    pub fn props(&self) -> &Properties {
        &self.props
    }

    pub fn get(&self, key: PropKey) -> Option<&PropertyValue> {
        self.props.get(key)
    }

    pub fn label(&self) -> Option<&PropertyValue> {
        self.props.get(PropKey::Label)
    }

    pub fn label_text(&self) -> Option<&str> {
        self.label().and_then(PropertyValue::as_str)
    }

    pub fn child_index(&self) -> Option<i64> {
        self.props.get(PropKey::ChildIndex).and_then(PropertyValue::as_int)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

/// A graph element, for property lookups that accept either kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Node(NodeId),
    Edge(EdgeId),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("edge endpoint {0} does not exist")]
    DanglingEndpoint(NodeId),
    #[error("unknown element {0:?}")]
    UnknownElement(Element),
}

type Adjacency = [Vec<EdgeId>; 4];

/// A code property graph. Obtained frozen from [`GraphBuilder::freeze`];
/// the frozen graph has no mutating methods and is `Send + Sync`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cpg {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_adj: Vec<Adjacency>,
    in_adj: Vec<Adjacency>,
}

impl Cpg {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn try_node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn try_edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.index())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    /// Outgoing edges of one type, in insertion order.
    pub fn out_edges(&self, node: NodeId, ty: EdgeType) -> &[EdgeId] {
        &self.out_adj[node.index()][ty.index()]
    }

    /// Incoming edges of one type, in insertion order.
    pub fn in_edges(&self, node: NodeId, ty: EdgeType) -> &[EdgeId] {
        &self.in_adj[node.index()][ty.index()]
    }

    /// All incident edges in one direction, ascending edge id.
    pub fn all_edges(&self, node: NodeId, dir: Direction) -> Vec<EdgeId> {
        let adj = match dir {
            Direction::Out => &self.out_adj[node.index()],
            Direction::In => &self.in_adj[node.index()],
        };
        let mut v: Vec<EdgeId> = adj.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    /// Neighbouring nodes over one edge type, in edge insertion order.
    pub fn adjacency(&self, node: NodeId, ty: EdgeType, dir: Direction) -> Vec<NodeId> {
        match dir {
            Direction::Out => self.out_edges(node, ty).iter().map(|e| self.edge(*e).dst).collect(),
            Direction::In => self.in_edges(node, ty).iter().map(|e| self.edge(*e).src).collect(),
        }
    }

    /// Looks up a property; absent keys yield `Ok(None)`.
    pub fn get_property(&self, element: Element, key: PropKey) -> Result<Option<&PropertyValue>, GraphError> {
        match element {
            Element::Node(n) => self
                .try_node(n)
                .map(|n| n.get(key))
                .ok_or(GraphError::UnknownElement(element)),
            Element::Edge(e) => self
                .try_edge(e)
                .map(|e| e.get(key))
                .ok_or(GraphError::UnknownElement(element)),
        }
    }

    /// AST parent of a node, if any.
    pub fn ast_parent(&self, node: NodeId) -> Option<NodeId> {
        self.in_edges(node, EdgeType::Ast).first().map(|e| self.edge(*e).src)
    }

    /// AST child whose edge carries `childIndex == index`.
    pub fn ast_child(&self, node: NodeId, index: usize) -> Option<NodeId> {
        self.out_edges(node, EdgeType::Ast)
            .iter()
            .map(|e| self.edge(*e))
            .find(|e| e.child_index() == Some(index as i64))
            .map(|e| e.dst)
    }

    pub fn ast_children(&self, node: NodeId) -> Vec<NodeId> {
        self.adjacency(node, EdgeType::Ast, Direction::Out)
    }
}

/// Mutable construction handle for a [`Cpg`]. Every insertion is checked
/// against the schema tables.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    g: Cpg,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn graph(&self) -> &Cpg {
        &self.g
    }

    pub fn add_node(&mut self, kind: NodeKind, props: Properties) -> Result<NodeId, GraphError> {
        let inst_type = check_node(kind, &props)?;
        let id = NodeId(self.g.nodes.len() as u32);
        self.g.nodes.push(Node { id, kind, inst_type, props });
        self.g.out_adj.push(Default::default());
        self.g.in_adj.push(Default::default());
        Ok(id)
    }

    pub fn add_edge(&mut self, src: NodeId, dst: NodeId, ty: EdgeType, props: Properties) -> Result<EdgeId, GraphError> {
        for n in [src, dst] {
            if n.index() >= self.g.nodes.len() {
                return Err(GraphError::DanglingEndpoint(n));
            }
        }
        let ddg_type = check_edge(ty, &props)?;
        let id = EdgeId(self.g.edges.len() as u32);
        self.g.edges.push(Edge { id, src, dst, ty, ddg_type, props });
        self.g.out_adj[src.index()][ty.index()].push(id);
        self.g.in_adj[dst.index()][ty.index()].push(id);
        Ok(id)
    }

    pub fn freeze(self) -> Cpg {
        self.g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(b: &mut GraphBuilder, props: Properties) -> NodeId {
        b.add_node(NodeKind::Instruction, props).unwrap()
    }

    #[test]
    fn first_node_is_zero_and_ids_increase() {
        let mut b = GraphBuilder::new();
        let m = b.add_node(NodeKind::Module, Properties::new().with(PropKey::Name, "")).unwrap();
        assert_eq!(m, NodeId(0));
        let c = inst(
            &mut b,
            Properties::new()
                .with(PropKey::InstType, "Const")
                .with(PropKey::ValueType, "i32")
                .with(PropKey::Value, 2i64),
        );
        assert_eq!(c, NodeId(1));
    }

    #[test]
    fn adjacency_preserves_insertion_order_per_type() {
        let mut b = GraphBuilder::new();
        let add = inst(&mut b, Properties::new().with(PropKey::InstType, "Binary").with(PropKey::Opcode, "i32.add"));
        let x = inst(&mut b, Properties::new().with(PropKey::InstType, "Nop"));
        let y = inst(&mut b, Properties::new().with(PropKey::InstType, "Nop"));
        b.add_edge(add, y, EdgeType::Ast, Properties::new().with(PropKey::ChildIndex, 0u32)).unwrap();
        b.add_edge(add, x, EdgeType::Cfg, Properties::new()).unwrap();
        b.add_edge(add, x, EdgeType::Ast, Properties::new().with(PropKey::ChildIndex, 1u32)).unwrap();
        let g = b.freeze();
        assert_eq!(g.adjacency(add, EdgeType::Ast, Direction::Out), vec![y, x]);
        assert_eq!(g.adjacency(x, EdgeType::Cfg, Direction::In), vec![add]);
        assert_eq!(g.all_edges(add, Direction::Out), vec![EdgeId(0), EdgeId(1), EdgeId(2)]);
        assert_eq!(g.ast_child(add, 1), Some(x));
        assert_eq!(g.ast_parent(y), Some(add));
    }

    #[test]
    fn self_loop_and_dangling() {
        let mut b = GraphBuilder::new();
        let a = inst(&mut b, Properties::new().with(PropKey::InstType, "Nop"));
        assert!(b.add_edge(a, a, EdgeType::Cfg, Properties::new()).is_ok());
        assert!(matches!(
            b.add_edge(a, NodeId(9), EdgeType::Cfg, Properties::new()),
            Err(GraphError::DanglingEndpoint(NodeId(9)))
        ));
    }

    #[test]
    fn absent_property_is_none_and_unknown_element_errors() {
        let mut b = GraphBuilder::new();
        let a = inst(&mut b, Properties::new().with(PropKey::InstType, "Nop"));
        let e = b.add_edge(a, a, EdgeType::Ast, Properties::new()).unwrap();
        let g = b.freeze();
        assert_eq!(g.get_property(Element::Edge(e), PropKey::Label).unwrap(), None);
        assert!(g.get_property(Element::Node(NodeId(5)), PropKey::Label).is_err());
    }

    #[test]
    fn frozen_graph_is_shareable() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Cpg>();
    }
}
