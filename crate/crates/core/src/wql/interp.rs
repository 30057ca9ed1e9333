//! Tree-walking evaluator. The graph is only read; the findings list is the
//! sole mutable output.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use crate::cpg::{Cpg, Direction, EdgeId, NodeId, PropKey};
use crate::vuln::{Finding, ScanConfig};

use super::ast::{BinOp, Expr, ExprKind, Literal, Program, Stmt, StmtKind, UnOp};
use super::builtins;
use super::error::{Pos, WqlError};
use super::value::Value;

pub type Result<T> = std::result::Result<T, WqlError>;

enum Flow {
    Normal,
    Break,
    Continue,
}

pub struct Interp<'g> {
    pub(super) g: &'g Cpg,
    scopes: Vec<HashMap<String, Value>>,
    pub(super) findings: Vec<Finding>,
    pub(super) query_id: u8,
}

/// Runs `program`, stamping every finding with `query_id` (0 for ad-hoc
/// programs).
pub fn eval(program: &Program, g: &Cpg, config: &ScanConfig, query_id: u8) -> Result<Vec<Finding>> {
    let mut it = Interp::new(g, config, query_id);
    it.block(&program.body)?;
    Ok(it.findings)
}

impl<'g> Interp<'g> {
    fn new(g: &'g Cpg, config: &ScanConfig, query_id: u8) -> Self {
        let json = config.to_json();
        let cfg = Value::from_json(&json);
        if let Value::Map(m) = &cfg {
            let pairs = m.borrow().get("allocPairs").cloned().unwrap_or(Value::Nil);
            m.borrow_mut().insert("pairMalloc".to_string(), pairs);
        }
        let mut globals = HashMap::new();
        globals.insert("sources".to_string(), Value::from_json(&json["sources"]));
        globals.insert("sinks".to_string(), Value::from_json(&json["sinks"]));
        globals.insert("config".to_string(), cfg);
        Interp { g, scopes: vec![globals], findings: Vec::new(), query_id }
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    /// Updates the innermost existing binding, or binds in the current scope.
    fn assign(&mut self, name: &str, v: Value) {
        for s in self.scopes.iter_mut().rev() {
            if let Some(slot) = s.get_mut(name) {
                *slot = v;
                return;
            }
        }
        self.scopes.last_mut().expect("global scope").insert(name.to_string(), v);
    }

    fn scoped<T>(&mut self, var: &str, v: Value, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.scopes.push(HashMap::from([(var.to_string(), v)]));
        let r = f(self);
        self.scopes.pop();
        r
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Flow> {
        for s in stmts {
            match self.stmt(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn items(&self, v: Value, pos: Pos) -> Result<Vec<Value>> {
        match v {
            Value::List(l) => Ok(l.borrow().clone()),
            Value::Map(m) => Ok(m.borrow().keys().map(Value::text).collect()),
            Value::Nil => Ok(Vec::new()),
            other => Err(WqlError::runtime(pos, format!("cannot iterate over {}", other.a_type_name()))),
        }
    }

    fn cond(&mut self, e: &Expr) -> Result<bool> {
        let v = self.expr(e)?;
        v.truthy()
            .ok_or_else(|| WqlError::runtime(e.pos, format!("{} is not a condition", v.a_type_name())))
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow> {
        match &s.kind {
            StmtKind::Expr(e) => {
                self.expr(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::Foreach { var, source, body } => {
                let src = self.expr(source)?;
                for item in self.items(src, source.pos)? {
                    match self.scoped(var, item, |it| it.block(body))? {
                        Flow::Break => break,
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::While { cond, body } => {
                while self.cond(cond)? {
                    self.scopes.push(HashMap::new());
                    let flow = self.block(body);
                    self.scopes.pop();
                    if let Flow::Break = flow? {
                        break;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then, otherwise } => {
                let branch = if self.cond(cond)? { then } else { otherwise };
                self.scopes.push(HashMap::new());
                let flow = self.block(branch);
                self.scopes.pop();
                flow
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
        }
    }

    pub(super) fn expr(&mut self, e: &Expr) -> Result<Value> {
        let pos = e.pos;
        match &e.kind {
            ExprKind::Lit(l) => Ok(match l {
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(f) => Value::Float(*f),
                Literal::Str(s) => Value::text(s),
                Literal::Nil => Value::Nil,
            }),
            ExprKind::Var(name) => self
                .lookup(name)
                .cloned()
                .ok_or_else(|| WqlError::runtime(pos, format!("undefined variable `{name}`"))),
            ExprKind::Assign(name, value) => {
                let v = self.expr(value)?;
                self.assign(name, v.clone());
                Ok(v)
            }
            ExprKind::Unary(op, inner) => match op {
                UnOp::Not => Ok(Value::Bool(!self.cond(inner)?)),
                UnOp::Neg => match self.expr(inner)? {
                    Value::Int(i) => Ok(Value::Int(i.wrapping_neg())),
                    Value::Float(f) => Ok(Value::Float(-f)),
                    v => Err(WqlError::runtime(pos, format!("cannot negate {}", v.a_type_name()))),
                },
            },
            ExprKind::Binary(BinOp::And, a, b) => Ok(Value::Bool(self.cond(a)? && self.cond(b)?)),
            ExprKind::Binary(BinOp::Or, a, b) => Ok(Value::Bool(self.cond(a)? || self.cond(b)?)),
            ExprKind::Binary(op, a, b) => {
                let (x, y) = (self.expr(a)?, self.expr(b)?);
                binary(*op, &x, &y, pos)
            }
            ExprKind::Attr(target, name) => {
                let t = self.expr(target)?;
                self.attr(&t, name, pos)
            }
            ExprKind::Index(target, index) => {
                let (t, i) = (self.expr(target)?, self.expr(index)?);
                index_value(&t, &i, pos)
            }
            ExprKind::Call(name, args) => {
                let vals = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>>>()?;
                builtins::call(self, name, vals, pos)
            }
            ExprKind::Method(target, name, args) => {
                let t = self.expr(target)?;
                let vals = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>>>()?;
                method(&t, name, vals, pos)
            }
            ExprKind::List(items) => {
                let vals = items.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>>>()?;
                Ok(Value::list(vals))
            }
            ExprKind::Range { var, source, pred } => {
                let src = self.expr(source)?;
                let mut kept = Vec::new();
                for item in self.items(src, source.pos)? {
                    if self.scoped(var, item.clone(), |it| it.cond(pred))? {
                        kept.push(item);
                    }
                }
                Ok(Value::list(kept))
            }
        }
    }

    fn attr(&self, t: &Value, name: &str, pos: Pos) -> Result<Value> {
        let g = self.g;
        let prop = |p: Option<&crate::cpg::PropertyValue>| p.map(Value::from_property).unwrap_or(Value::Nil);
        match t {
            Value::Node(n) => {
                let node = g
                    .try_node(*n)
                    .ok_or_else(|| WqlError::runtime(pos, format!("node {} is not in the graph", n.0)))?;
                Ok(match name {
                    "id" => Value::Int(i64::from(n.0)),
                    "type" => Value::text(node.kind.as_str()),
                    "inEdges" => edge_list(g.all_edges(*n, Direction::In)),
                    "outEdges" => edge_list(g.all_edges(*n, Direction::Out)),
                    _ => PropKey::from_str(name).map(|k| prop(node.get(k))).unwrap_or(Value::Nil),
                })
            }
            Value::Edge(e) => {
                let edge = g
                    .try_edge(*e)
                    .ok_or_else(|| WqlError::runtime(pos, format!("edge {} is not in the graph", e.0)))?;
                Ok(match name {
                    "id" => Value::Int(i64::from(e.0)),
                    "type" => Value::text(edge.ty.as_str()),
                    "src" => Value::Node(edge.src),
                    "dst" => Value::Node(edge.dst),
                    _ => PropKey::from_str(name).map(|k| prop(edge.get(k))).unwrap_or(Value::Nil),
                })
            }
            Value::Map(m) => Ok(m.borrow().get(name).cloned().unwrap_or(Value::Nil)),
            Value::Nil => Ok(Value::Nil),
            other => Err(WqlError::runtime(pos, format!("{} has no attribute `{name}`", other.a_type_name()))),
        }
    }
}

fn edge_list(mut ids: Vec<EdgeId>) -> Value {
    ids.sort_unstable();
    Value::list(ids.into_iter().map(Value::Edge).collect())
}

fn as_node(v: &Value, pos: Pos) -> Result<NodeId> {
    match v {
        Value::Node(n) => Ok(*n),
        other => Err(WqlError::runtime(pos, format!("expected a node, found {}", other.a_type_name()))),
    }
}

pub(super) fn expect_node(v: &Value, pos: Pos) -> Result<NodeId> {
    as_node(v, pos)
}

fn index_value(t: &Value, i: &Value, pos: Pos) -> Result<Value> {
    match (t, i) {
        (Value::List(l), Value::Int(k)) => {
            let l = l.borrow();
            usize::try_from(*k)
                .ok()
                .and_then(|k| l.get(k).cloned())
                .ok_or_else(|| WqlError::runtime(pos, format!("index {k} out of range for a list of {}", l.len())))
        }
        (Value::Map(m), Value::Text(k)) => Ok(m.borrow().get(&**k).cloned().unwrap_or(Value::Nil)),
        (Value::Map(m), other) => Ok(m.borrow().get(&other.to_string()).cloned().unwrap_or(Value::Nil)),
        (Value::Nil, _) => Ok(Value::Nil),
        (t, i) => Err(WqlError::runtime(pos, format!("cannot index {} with {}", t.a_type_name(), i.a_type_name()))),
    }
}

fn binary(op: BinOp, x: &Value, y: &Value, pos: Pos) -> Result<Value> {
    use Value::{Float, Int, Text};
    let type_err = || {
        WqlError::runtime(pos, format!("operator {op:?} is not defined on {} and {}", x.type_name(), y.type_name()))
    };
    let num = |v: &Value| match v {
        Int(i) => Some(*i as f64),
        Float(f) => Some(*f),
        _ => None,
    };
    match op {
        BinOp::Eq => Ok(Value::Bool(x.equals(y))),
        BinOp::Ne => Ok(Value::Bool(!x.equals(y))),
        BinOp::In => match y {
            Value::List(l) => Ok(Value::Bool(l.borrow().iter().any(|v| v.equals(x)))),
            Value::Map(m) => Ok(Value::Bool(x.as_str().is_some_and(|k| m.borrow().contains_key(k)))),
            Text(hay) => Ok(Value::Bool(x.as_str().is_some_and(|n| hay.contains(n)))),
            Value::Nil => Ok(Value::Bool(false)),
            _ => Err(type_err()),
        },
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (x, y) {
                (Text(a), Text(b)) => a.cmp(b),
                (Int(a), Int(b)) => a.cmp(b),
                _ => match (num(x), num(y)) {
                    (Some(a), Some(b)) => a.partial_cmp(&b).ok_or_else(type_err)?,
                    _ => return Err(type_err()),
                },
            };
            Ok(Value::Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            }))
        }
        BinOp::Add => match (x, y) {
            (Int(a), Int(b)) => Ok(Int(a.wrapping_add(*b))),
            (Text(a), Text(b)) => Ok(Value::text(format!("{a}{b}"))),
            (Value::List(a), Value::List(b)) => {
                let mut v = a.borrow().clone();
                v.extend(b.borrow().iter().cloned());
                Ok(Value::list(v))
            }
            _ => num(x).zip(num(y)).map(|(a, b)| Float(a + b)).ok_or_else(type_err),
        },
        BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => match (x, y) {
            (Int(a), Int(b)) => match op {
                BinOp::Sub => Ok(Int(a.wrapping_sub(*b))),
                BinOp::Mul => Ok(Int(a.wrapping_mul(*b))),
                _ if *b == 0 => Err(WqlError::runtime(pos, "integer division by zero")),
                BinOp::Div => Ok(Int(a.wrapping_div(*b))),
                _ => Ok(Int(a.wrapping_rem(*b))),
            },
            _ => {
                let (a, b) = num(x).zip(num(y)).ok_or_else(type_err)?;
                Ok(Float(match op {
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    _ => a % b,
                }))
            }
        },
        BinOp::And | BinOp::Or => unreachable!("short-circuit operators are evaluated lazily"),
    }
}

fn arity(name: &str, args: &[Value], n: usize, pos: Pos) -> Result<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(WqlError::runtime(pos, format!("`{name}` takes {n} argument(s), got {}", args.len())))
    }
}

fn method(t: &Value, name: &str, args: Vec<Value>, pos: Pos) -> Result<Value> {
    match (t, name) {
        (Value::List(l), "empty") => arity(name, &args, 0, pos).map(|_| Value::Bool(l.borrow().is_empty())),
        (Value::List(l), "size") => arity(name, &args, 0, pos).map(|_| Value::Int(l.borrow().len() as i64)),
        (Value::List(l), "append") => {
            arity(name, &args, 1, pos)?;
            l.borrow_mut().push(args.into_iter().next().expect("one argument"));
            Ok(Value::Nil)
        }
        (Value::List(l), "contains") => {
            arity(name, &args, 1, pos)?;
            Ok(Value::Bool(l.borrow().iter().any(|v| v.equals(&args[0]))))
        }
        (Value::Map(m), "empty") => arity(name, &args, 0, pos).map(|_| Value::Bool(m.borrow().is_empty())),
        (Value::Map(m), "size") => arity(name, &args, 0, pos).map(|_| Value::Int(m.borrow().len() as i64)),
        (Value::Map(m), "keys") => {
            arity(name, &args, 0, pos)?;
            Ok(Value::list(m.borrow().keys().map(Value::text).collect()))
        }
        (Value::Map(m), "contains") => {
            arity(name, &args, 1, pos)?;
            Ok(Value::Bool(m.borrow().contains_key(&args[0].to_string())))
        }
        (Value::Map(m), "put") => {
            arity(name, &args, 2, pos)?;
            let mut it = args.into_iter();
            let (k, v) = (it.next().expect("key"), it.next().expect("value"));
            m.borrow_mut().insert(k.to_string(), v);
            Ok(Value::Nil)
        }
        (Value::Text(s), "empty") => arity(name, &args, 0, pos).map(|_| Value::Bool(s.is_empty())),
        (Value::Nil, "empty") => arity(name, &args, 0, pos).map(|_| Value::Bool(true)),
        _ => Err(WqlError::runtime(pos, format!("{} has no method `{name}`", t.a_type_name()))),
    }
}

pub(super) fn new_map() -> Value {
    Value::map(BTreeMap::new())
}
