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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} error at {pos}: {message}", match .kind { ErrorKind::Syntax => "syntax", ErrorKind::Runtime => "runtime" })]
pub struct WqlError {
    pub kind: ErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl WqlError {
    pub fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        WqlError { kind: ErrorKind::Syntax, pos, message: message.into() }
    }

    pub fn runtime(pos: Pos, message: impl Into<String>) -> Self {
        WqlError { kind: ErrorKind::Runtime, pos, message: message.into() }
    }
}
