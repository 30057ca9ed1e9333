//! Abstract states: dependency sets for globals, locals and stack slots,
//! plus the open label frames.

use std::fmt;
use std::rc::Rc;

use crate::builders::cfg::{EdgeEffect, Unwind};

/// A set of dependencies, identified by the node id of the instruction
/// that originates each one. Sorted and duplicate free; cheap to clone.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct DepSet(Rc<Vec<u32>>);

impl DepSet {
    pub fn empty() -> Self {
        DepSet::default()
    }

    pub fn single(origin: u32) -> Self {
        DepSet(Rc::new(vec![origin]))
    }

    pub fn from_iter_unsorted(items: impl IntoIterator<Item = u32>) -> Self {
        let mut v: Vec<u32> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        DepSet(Rc::new(v))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, origin: u32) -> bool {
        self.0.binary_search(&origin).is_ok()
    }

    pub fn is_subset(&self, other: &DepSet) -> bool {
        if Rc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        let mut it = other.0.iter();
        self.0.iter().all(|x| it.by_ref().any(|y| y == x))
    }

    pub fn union(&self, other: &DepSet) -> DepSet {
        if other.is_subset(self) {
            return self.clone();
        }
        if self.is_subset(other) {
            return other.clone();
        }
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        DepSet(Rc::new(out))
    }

    pub fn with(&self, origin: u32) -> DepSet {
        self.union(&DepSet::single(origin))
    }
}

impl fmt::Debug for DepSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// An open block, loop or if; `base` is the stack height when it opened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub base: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct State {
    pub globals: Vec<DepSet>,
    pub locals: Vec<DepSet>,
    pub stack: Vec<DepSet>,
    pub labels: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("stack heights differ at join ({0} vs {1})")]
    StackMismatch(usize, usize),
    #[error("label stacks differ at join")]
    LabelMismatch,
    #[error("stack underflow: needs {needed}, has {height}")]
    Underflow { needed: usize, height: usize },
    #[error("branch depth {0} exceeds open labels")]
    BadDepth(u32),
    #[error("variable index {0} out of range")]
    UnknownVariable(u32),
}

impl State {
    pub fn initial(nglobals: usize, nlocals: usize) -> Self {
        State {
            globals: vec![DepSet::empty(); nglobals],
            locals: vec![DepSet::empty(); nlocals],
            stack: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Pointwise union. Both states must have the same shape.
    pub fn join(&self, other: &State) -> Result<State, StateError> {
        if self.stack.len() != other.stack.len() {
            return Err(StateError::StackMismatch(self.stack.len(), other.stack.len()));
        }
        if self.labels != other.labels {
            return Err(StateError::LabelMismatch);
        }
        let zip = |a: &[DepSet], b: &[DepSet]| a.iter().zip(b).map(|(x, y)| x.union(y)).collect();
        Ok(State {
            globals: zip(&self.globals, &other.globals),
            locals: zip(&self.locals, &other.locals),
            stack: zip(&self.stack, &other.stack),
            labels: self.labels.clone(),
        })
    }

    /// Pointwise inclusion, assuming equal shapes.
    pub fn is_subset(&self, other: &State) -> bool {
        let sub = |a: &[DepSet], b: &[DepSet]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.is_subset(y));
        self.labels == other.labels
            && sub(&self.globals, &other.globals)
            && sub(&self.locals, &other.locals)
            && sub(&self.stack, &other.stack)
    }

    pub fn pop_n(&mut self, n: usize) -> Result<Vec<DepSet>, StateError> {
        if self.stack.len() < n {
            return Err(StateError::Underflow { needed: n, height: self.stack.len() });
        }
        let at = self.stack.len() - n;
        Ok(self.stack.split_off(at))
    }

    pub fn peek_n(&self, n: usize) -> Result<&[DepSet], StateError> {
        if self.stack.len() < n {
            return Err(StateError::Underflow { needed: n, height: self.stack.len() });
        }
        Ok(&self.stack[self.stack.len() - n..])
    }

    pub fn open_frame(&mut self) {
        self.labels.push(Frame { base: self.stack.len() as u32 });
    }

    pub fn unwind(&mut self, u: Unwind) -> Result<(), StateError> {
        let depth = u.depth as usize;
        if depth >= self.labels.len() {
            return Err(StateError::BadDepth(u.depth));
        }
        let idx = self.labels.len() - 1 - depth;
        let base = self.labels[idx].base as usize;
        let keep = u.keep as usize;
        if self.stack.len() < base + keep {
            return Err(StateError::Underflow { needed: base + keep, height: self.stack.len() });
        }
        let kept = self.stack.split_off(self.stack.len() - keep);
        self.stack.truncate(base);
        self.stack.extend(kept);
        self.labels.truncate(if u.pop_target { idx } else { idx + 1 });
        Ok(())
    }

    pub fn apply(&mut self, effect: &EdgeEffect) -> Result<(), StateError> {
        for u in &effect.0 {
            self.unwind(*u)?;
        }
        Ok(())
    }

    /// Every origin mentioned anywhere in the state.
    pub fn origins(&self) -> Vec<u32> {
        let all = self.globals.iter().chain(&self.locals).chain(&self.stack);
        DepSet::from_iter_unsorted(all.flat_map(|s| s.as_slice().iter().copied())).as_slice().to_vec()
    }
}
