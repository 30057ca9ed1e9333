//! Code property graphs for WebAssembly text modules.

pub mod builders;
pub mod cpg;
pub mod ddg;
pub mod error;
pub mod export;
pub mod frontend;
pub mod query;
pub mod vuln;
pub mod wql;

pub use error::BuildError;
