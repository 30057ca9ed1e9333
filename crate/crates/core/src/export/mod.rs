//! Serializers for a frozen graph. JSON is lossless and re-importable; DOT,
//! Datalog facts and Neo4j CSV are projections for external tools.

mod datalog;
mod dot;
mod json;
mod neo4j;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use datalog::{arity as datalog_arity, datalog_facts, PREDICATES};
pub use dot::to_dot;
pub use json::{import_json, to_json_string, ImportError, FORMAT_VERSION};
pub use neo4j::neo4j_csv;

use crate::cpg::{Cpg, EdgeType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
    Datalog,
    Neo4jCsv,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Json, Format::Dot, Format::Datalog, Format::Neo4jCsv];

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Dot => "dot",
            Format::Datalog => "datalog",
            Format::Neo4jCsv => "neo4j-csv",
        }
    }

    /// Datalog and Neo4j write several files into a directory.
    pub fn is_multi_file(self) -> bool {
        matches!(self, Format::Datalog | Format::Neo4jCsv)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown export format `{0}` (expected json, dot, datalog or neo4j-csv)")]
pub struct UnknownFormat(pub String);

impl FromStr for Format {
    type Err = UnknownFormat;
    fn from_str(s: &str) -> Result<Self, UnknownFormat> {
        Format::ALL.into_iter().find(|f| f.as_str() == s).ok_or_else(|| UnknownFormat(s.to_string()))
    }
}

/// One export request: a format, a destination (a file, or a directory for
/// multi-file formats) and the DOT edge filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportManifest {
    pub format: Format,
    pub output: PathBuf,
    pub dot_edges: Option<Vec<EdgeType>>,
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {source}")]
pub struct ExportError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// In-memory rendering: `(relative file name, contents)` pairs. Single-file
/// formats yield one pair with an empty name.
pub fn render(g: &Cpg, format: Format, dot_edges: Option<&[EdgeType]>) -> Vec<(String, String)> {
    match format {
        Format::Json => vec![(String::new(), to_json_string(g))],
        Format::Dot => vec![(String::new(), to_dot(g, dot_edges))],
        Format::Datalog => datalog_facts(g),
        Format::Neo4jCsv => {
            let (nodes, edges) = neo4j_csv(g);
            vec![("nodes.csv".to_string(), nodes), ("edges.csv".to_string(), edges)]
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), ExportError> {
    std::fs::write(path, text).map_err(|source| ExportError { path: path.to_path_buf(), source })
}

/// Writes the rendering to disk and returns the written paths.
pub fn export(g: &Cpg, manifest: &ExportManifest) -> Result<Vec<PathBuf>, ExportError> {
    let files = render(g, manifest.format, manifest.dot_edges.as_deref());
    if !manifest.format.is_multi_file() {
        let (_, text) = &files[0];
        write(&manifest.output, text)?;
        return Ok(vec![manifest.output.clone()]);
    }
    std::fs::create_dir_all(&manifest.output)
        .map_err(|source| ExportError { path: manifest.output.clone(), source })?;
    let mut written = Vec::new();
    for (name, text) in files {
        let path = manifest.output.join(name);
        write(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_names_round_trip() {
        for f in Format::ALL {
            assert_eq!(f.as_str().parse::<Format>().unwrap(), f);
        }
        assert!("xml".parse::<Format>().is_err());
    }
}
