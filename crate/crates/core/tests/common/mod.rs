//! Shared fixture loading for the integration tests.
#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use wasm_cpg::builders::{build_from_wat, Built};
use wasm_cpg::frontend::ModuleIR;
use wasm_cpg::vuln::ScanConfig;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Corpus file names, sorted.
pub fn corpus_names() -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(fixtures_dir().join("corpus"))
        .expect("corpus directory")
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".wat"))
        .collect();
    v.sort();
    v
}

pub fn build(rel: &str) -> (ModuleIR, Built) {
    build_from_wat(&read_fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn build_corpus(name: &str) -> (ModuleIR, Built) {
    build(&format!("corpus/{name}"))
}

/// Every WAT fixture: the corpus plus the two transcriptions.
pub fn all_fixture_paths() -> Vec<String> {
    let mut v: Vec<String> = corpus_names().into_iter().map(|n| format!("corpus/{n}")).collect();
    v.push("figure_ddg.wat".to_string());
    v.push("libpng_get_token.wat".to_string());
    v
}

pub fn config() -> ScanConfig {
    ScanConfig::from_json(&read_fixture("config.json")).expect("fixture config")
}

/// Expected `(query, kind, function, label)` findings per corpus file.
pub type Key = (u8, String, String, String);

pub fn answers() -> BTreeMap<String, Vec<Key>> {
    serde_json::from_str(&read_fixture("answers.json")).expect("answer key")
}
