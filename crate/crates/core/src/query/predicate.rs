//! Composable node predicates and edge conditions.

use std::fmt;
use std::sync::Arc;

use crate::cpg::{Cpg, DdgType, Direction, Edge, EdgeType, NodeId, NodeKind, PropKey, PropertyValue};

use super::api::bfs;

/// Condition on a single edge. Unset fields match anything.
#[derive(Clone, Default)]
pub struct EdgeCond {
    pub ty: Option<EdgeType>,
    pub ddg_type: Option<DdgType>,
    pub label: Option<PropertyValue>,
    pub custom: Option<Arc<dyn Fn(&Edge) -> bool + Send + Sync>>,
}

impl EdgeCond {
    pub fn any() -> Self {
        EdgeCond::default()
    }

    pub fn of_type(ty: EdgeType) -> Self {
        EdgeCond { ty: Some(ty), ..Default::default() }
    }

    pub fn ddg(ddg_type: DdgType, label: Option<&str>) -> Self {
        EdgeCond {
            ty: Some(EdgeType::Ddg),
            ddg_type: Some(ddg_type),
            label: label.map(|l| PropertyValue::Text(l.to_string())),
            custom: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<PropertyValue>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn matches(&self, e: &Edge) -> bool {
        self.ty.is_none_or(|t| e.ty == t)
            && self.ddg_type.is_none_or(|d| e.ddg_type() == Some(d))
            && self.label.as_ref().is_none_or(|l| e.label() == Some(l))
            && self.custom.as_ref().is_none_or(|f| f(e))
    }
}

impl fmt::Debug for EdgeCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EdgeCond")
            .field("ty", &self.ty)
            .field("ddg_type", &self.ddg_type)
            .field("label", &self.label)
            .field("custom", &self.custom.is_some())
            .finish()
    }
}

type Hook = Arc<dyn Fn(&Cpg, NodeId) -> bool + Send + Sync>;

/// Boolean condition over a node. Evaluation never mutates the graph; an
/// absent property makes a comparison false.
#[derive(Clone)]
pub enum Pred {
    True,
    False,
    Kind(NodeKind),
    /// `property(key) == value` when `equal`, `!=` otherwise (both false
    /// when the key is absent).
    Property { key: PropKey, value: PropertyValue, equal: bool },
    /// Some incident edge in `dir` satisfies the condition.
    Edge { dir: Direction, cond: EdgeCond },
    /// `node` is reachable from the candidate (`Out`) or reaches it (`In`)
    /// over edges satisfying the condition.
    Reaches { dir: Direction, node: NodeId, cond: EdgeCond },
    Test(Hook),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

impl fmt::Debug for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::True => f.write_str("True"),
            Pred::False => f.write_str("False"),
            Pred::Kind(k) => write!(f, "Kind({k})"),
            Pred::Property { key, value, equal } => {
                write!(f, "{key} {} {value:?}", if *equal { "==" } else { "!=" })
            }
            Pred::Edge { dir, cond } => write!(f, "Edge({dir:?}, {cond:?})"),
            Pred::Reaches { dir, node, cond } => write!(f, "Reaches({dir:?}, {node}, {cond:?})"),
            Pred::Test(_) => f.write_str("Test(..)"),
            Pred::And(a, b) => write!(f, "({a:?} && {b:?})"),
            Pred::Or(a, b) => write!(f, "({a:?} || {b:?})"),
            Pred::Not(a) => write!(f, "!{a:?}"),
        }
    }
}

impl Pred {
    pub fn property(key: PropKey, value: impl Into<PropertyValue>) -> Pred {
        Pred::Property { key, value: value.into(), equal: true }
    }

    pub fn property_ne(key: PropKey, value: impl Into<PropertyValue>) -> Pred {
        Pred::Property { key, value: value.into(), equal: false }
    }

    pub fn inst_type(t: crate::cpg::InstType) -> Pred {
        Pred::property(PropKey::InstType, t.as_str())
    }

    pub fn label(l: &str) -> Pred {
        Pred::property(PropKey::Label, l)
    }

    pub fn in_edge(ty: EdgeType, label: Option<PropertyValue>) -> Pred {
        Pred::Edge { dir: Direction::In, cond: EdgeCond { ty: Some(ty), label, ..Default::default() } }
    }

    pub fn out_edge(ty: EdgeType, label: Option<PropertyValue>) -> Pred {
        Pred::Edge { dir: Direction::Out, cond: EdgeCond { ty: Some(ty), label, ..Default::default() } }
    }

    pub fn in_ddg_edge(ddg: DdgType, label: Option<&str>) -> Pred {
        Pred::Edge { dir: Direction::In, cond: EdgeCond::ddg(ddg, label) }
    }

    pub fn out_ddg_edge(ddg: DdgType, label: Option<&str>) -> Pred {
        Pred::Edge { dir: Direction::Out, cond: EdgeCond::ddg(ddg, label) }
    }

    pub fn reaches_in(node: NodeId, cond: EdgeCond) -> Pred {
        Pred::Reaches { dir: Direction::In, node, cond }
    }

    pub fn reaches_out(node: NodeId, cond: EdgeCond) -> Pred {
        Pred::Reaches { dir: Direction::Out, node, cond }
    }

    pub fn test(f: impl Fn(&Cpg, NodeId) -> bool + Send + Sync + 'static) -> Pred {
        Pred::Test(Arc::new(f))
    }

    pub fn and(self, other: Pred) -> Pred {
        Pred::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Pred) -> Pred {
        Pred::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Pred {
        Pred::Not(Box::new(self))
    }

    pub fn eval(&self, g: &Cpg, n: NodeId) -> bool {
        let Some(node) = g.try_node(n) else { return false };
        match self {
            Pred::True => true,
            Pred::False => false,
            Pred::Kind(k) => node.kind == *k,
            Pred::Property { key, value, equal } => match node.get(*key) {
                Some(v) => (v == value) == *equal,
                None => false,
            },
            Pred::Edge { dir, cond } => incident(g, n, *dir, cond.ty).any(|e| cond.matches(g.edge(e))),
            Pred::Reaches { dir, node: target, cond } => {
                let found = bfs(g, &[n], &Pred::True, cond, *dir, None);
                found.binary_search(target).is_ok()
            }
            Pred::Test(f) => f(g, n),
            Pred::And(a, b) => a.eval(g, n) && b.eval(g, n),
            Pred::Or(a, b) => a.eval(g, n) || b.eval(g, n),
            Pred::Not(a) => !a.eval(g, n),
        }
    }
}

/// Incident edges of a node, restricted to one type when given.
pub(crate) fn incident(
    g: &Cpg,
    n: NodeId,
    dir: Direction,
    ty: Option<EdgeType>,
) -> Box<dyn Iterator<Item = crate::cpg::EdgeId> + '_> {
    match ty {
        Some(t) => {
            let list = match dir {
                Direction::Out => g.out_edges(n, t),
                Direction::In => g.in_edges(n, t),
            };
            Box::new(list.iter().copied())
        }
        None => Box::new(g.all_edges(n, dir).into_iter()),
    }
}
