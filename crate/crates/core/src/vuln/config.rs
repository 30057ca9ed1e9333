//! Scan configuration: which functions are sources, sinks, allocators and
//! so on. Function names are stored with a leading `$`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Argument positions of a buffer-writing call: destination and size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriterArgs(pub usize, pub usize);

impl WriterArgs {
    pub fn dst(self) -> usize {
        self.0
    }

    pub fn size(self) -> usize {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ScanConfig {
    pub sources: Vec<String>,
    pub sinks: Vec<String>,
    pub dangerous_functions: Vec<String>,
    /// Function name → index of its format-string argument.
    pub format_functions: BTreeMap<String, usize>,
    /// Allocator → matching deallocator.
    #[serde(alias = "pairMalloc")]
    pub alloc_pairs: BTreeMap<String, String>,
    /// Function name → (destination, size) argument positions.
    pub buffer_writers: BTreeMap<String, WriterArgs>,
    /// Maximum number of call hops followed by the tainted-parameter query.
    pub interproc_depth: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let writers = [
            ("$memcpy", WriterArgs(0, 2)),
            ("$memmove", WriterArgs(0, 2)),
            ("$memset", WriterArgs(0, 2)),
            ("$strncpy", WriterArgs(0, 2)),
            ("$read", WriterArgs(1, 2)),
            ("$fgets", WriterArgs(0, 1)),
        ];
        ScanConfig {
            sources: Vec::new(),
            sinks: Vec::new(),
            dangerous_functions: Vec::new(),
            format_functions: BTreeMap::new(),
            alloc_pairs: BTreeMap::new(),
            buffer_writers: writers.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            interproc_depth: 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn dollar(name: &str) -> String {
    if name.starts_with('$') {
        name.to_string()
    } else {
        format!("${name}")
    }
}

impl ScanConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScanConfig = serde_json::from_str(text)?;
        cfg.normalized()
    }

    /// Adds the `$` prefix to every function name and checks invariants.
    pub fn normalized(self) -> Result<Self, ConfigError> {
        let list = |v: Vec<String>| v.iter().map(|s| dollar(s)).collect::<Vec<_>>();
        let cfg = ScanConfig {
            sources: list(self.sources),
            sinks: list(self.sinks),
            dangerous_functions: list(self.dangerous_functions),
            format_functions: self.format_functions.into_iter().map(|(k, v)| (dollar(&k), v)).collect(),
            alloc_pairs: self.alloc_pairs.into_iter().map(|(k, v)| (dollar(&k), dollar(&v))).collect(),
            buffer_writers: self.buffer_writers.into_iter().map(|(k, v)| (dollar(&k), v)).collect(),
            interproc_depth: self.interproc_depth,
        };
        for (a, d) in &cfg.alloc_pairs {
            if a == d {
                return Err(ConfigError::Invalid(format!("allocator {a} is its own deallocator")));
            }
        }
        Ok(cfg)
    }

    /// JSON form with every key present, as handed to WQL programs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
