//! A small imperative query language over the graph. Programs read the
//! graph through built-ins and report through `vulnerability(...)`.
//!
//! ```text
//! foreach func in functions():
//!     sinkCalls := [n in instructions(func) : n.instType = "Call" && n.label in sinks];
//!     foreach sink in sinkCalls:
//!         vulnerability("Sink call", func.name, sink.label);
//! ```

pub mod ast;
mod builtins;
mod error;
mod interp;
mod lexer;
mod parser;
mod value;

pub use builtins::BUILTINS;
pub use error::{ErrorKind, Pos, WqlError};
pub use interp::eval;
pub use lexer::{tokenize, Tok, Token};
pub use parser::parse;
pub use value::Value;

use crate::cpg::Cpg;
use crate::vuln::{Finding, ScanConfig};

/// WQL twins of the native detectors, indexed by query id.
pub const TWINS: [(u8, &str); 10] = [
    (1, include_str!("../../queries/q01_format_strings.wql")),
    (2, include_str!("../../queries/q02_dangerous_functions.wql")),
    (3, include_str!("../../queries/q03_use_after_free.wql")),
    (4, include_str!("../../queries/q04_double_free.wql")),
    (5, include_str!("../../queries/q05_tainted_call_indirect.wql")),
    (6, include_str!("../../queries/q06_tainted_func_to_func.wql")),
    (7, include_str!("../../queries/q07_tainted_local_to_func.wql")),
    (8, include_str!("../../queries/q08_bo_static_buffer.wql")),
    (9, include_str!("../../queries/q09_bo_static_buffer_malloc.wql")),
    (10, include_str!("../../queries/q10_bo_loops.wql")),
];

pub fn twin_source(id: u8) -> Option<&'static str> {
    TWINS.iter().find(|(i, _)| *i == id).map(|(_, s)| *s)
}

/// Parses and runs one program.
pub fn run(source: &str, g: &Cpg, config: &ScanConfig, query_id: u8) -> Result<Vec<Finding>, WqlError> {
    eval(&parse(source)?, g, config, query_id)
}

/// Runs the WQL twin of detector `id`.
pub fn run_twin(id: u8, g: &Cpg, config: &ScanConfig) -> Result<Vec<Finding>, WqlError> {
    let src = twin_source(id).ok_or_else(|| WqlError::runtime(Pos::default(), format!("no query with id {id}")))?;
    run(src, g, config, id)
}
