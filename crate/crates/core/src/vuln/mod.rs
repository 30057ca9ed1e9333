//! Vulnerability detectors over a built graph, configured by [`ScanConfig`].

mod config;
mod finding;
mod queries;

pub use config::{ConfigError, ScanConfig, WriterArgs};
pub use finding::Finding;
pub use queries::{query_name, run_all, run_query, tainted_params, QUERY_IDS};
