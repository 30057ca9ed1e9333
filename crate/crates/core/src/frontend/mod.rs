//! WebAssembly text-format frontend: reader, parser, module representation,
//! instruction arity and a pretty-printer.

mod arity;
mod error;
mod ir;
mod numbers;
pub mod opcodes;
mod parser;
mod printer;
mod sexpr;

pub use arity::{instruction_arity, max_stack_height, validate_function, Arity, ArityError};
pub use error::{FrontendError, FrontendErrorKind, Pos};
pub use ir::*;
pub use parser::parse_module;
pub use printer::print_module;
