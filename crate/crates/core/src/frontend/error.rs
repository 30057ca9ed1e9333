use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrontendErrorKind {
    Syntax(String),
    UnsupportedOpcode(String),
    /// An identifier or index that does not resolve; `what` is the namespace.
    Unresolved { what: &'static str, name: String },
    /// A body that violates stack typing (underflow, wrong result count).
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct FrontendError {
    pub pos: Pos,
    pub kind: FrontendErrorKind,
}

impl FrontendError {
    pub fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        FrontendError { pos, kind: FrontendErrorKind::Syntax(msg.into()) }
    }

    pub fn unsupported(pos: Pos, opcode: impl Into<String>) -> Self {
        FrontendError { pos, kind: FrontendErrorKind::UnsupportedOpcode(opcode.into()) }
    }

    pub fn unresolved(pos: Pos, what: &'static str, name: impl Into<String>) -> Self {
        FrontendError { pos, kind: FrontendErrorKind::Unresolved { what, name: name.into() } }
    }

    pub fn invalid(pos: Pos, msg: impl Into<String>) -> Self {
        FrontendError { pos, kind: FrontendErrorKind::Invalid(msg.into()) }
    }
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FrontendErrorKind::Syntax(m) => write!(f, "{}: syntax error: {m}", self.pos),
            FrontendErrorKind::UnsupportedOpcode(op) => {
                write!(f, "{}: unsupported opcode `{op}`", self.pos)
            }
            FrontendErrorKind::Unresolved { what, name } => {
                write!(f, "{}: unresolved {what} `{name}`", self.pos)
            }
            FrontendErrorKind::Invalid(m) => write!(f, "{}: invalid body: {m}", self.pos),
        }
    }
}
