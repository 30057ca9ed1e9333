//! Detector invariants: monotone in the configured sources and sinks,
//! invariant under consistent renaming, and blind to edge types they do not
//! use.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use wasm_cpg::builders::build_from_wat;
use wasm_cpg::cpg::{Cpg, EdgeType};
use wasm_cpg::export::{import_json, to_json_string};
use wasm_cpg::vuln::{run_query, Finding, ScanConfig, QUERY_IDS};

/// Edge types each detector reads; AST is always needed to find calls.
fn used_edges(id: u8) -> &'static [EdgeType] {
    use EdgeType::*;
    match id {
        2 | 8 => &[Ast],
        1 | 5 | 6 | 9 | 10 => &[Ast, Ddg],
        3 | 4 => &[Ast, Cfg, Ddg],
        // Parameter taint walks the CFG to find reads of the entry value.
        7 => &[Ast, Cfg, Cg, Ddg],
        _ => unreachable!("no detector {id}"),
    }
}

/// Copy of `g` with only the given edge types, edge ids renumbered densely.
fn keep_edges(g: &Cpg, keep: &[EdgeType]) -> Cpg {
    let mut doc: Value = serde_json::from_str(&to_json_string(g)).unwrap();
    let names: Vec<&str> = keep.iter().map(|t| t.as_str()).collect();
    let edges = doc["edges"].as_array_mut().unwrap();
    edges.retain(|e| names.contains(&e["type"].as_str().unwrap()));
    for (i, e) in edges.iter_mut().enumerate() {
        e["id"] = Value::from(i);
    }
    import_json(&doc.to_string()).unwrap()
}

type Key = (String, String, String);

fn keys(fs: &[Finding]) -> BTreeSet<Key> {
    fs.iter().map(|f| (f.kind.clone(), f.function.clone(), f.label.clone())).collect()
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.$-!#%&'*+/:<=>?@\\^`|~".contains(c)
}

/// Replaces whole-identifier occurrences of `from` (which starts with `$`).
fn rename_ident(text: &str, from: &str, to: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find(from) {
        let after = &rest[i + from.len()..];
        let whole = !after.starts_with(is_ident_char);
        out.push_str(&rest[..i]);
        out.push_str(if whole { to } else { from });
        rest = after;
    }
    out.push_str(rest);
    out
}

fn rename_config(cfg: &ScanConfig, from: &str, to: &str) -> ScanConfig {
    let r = |s: &String| if s == from { to.to_string() } else { s.clone() };
    ScanConfig {
        sources: cfg.sources.iter().map(r).collect(),
        sinks: cfg.sinks.iter().map(r).collect(),
        dangerous_functions: cfg.dangerous_functions.iter().map(r).collect(),
        format_functions: cfg.format_functions.iter().map(|(k, v)| (r(k), *v)).collect(),
        alloc_pairs: cfg.alloc_pairs.iter().map(|(k, v)| (r(k), r(v))).collect(),
        buffer_writers: cfg.buffer_writers.iter().map(|(k, v)| (r(k), *v)).collect(),
        interproc_depth: cfg.interproc_depth,
    }
}

fn rename_finding(f: &Finding, from: &str, to: &str) -> Finding {
    Finding {
        function: rename_ident(&f.function, from, to),
        label: rename_ident(&f.label, from, to),
        description: rename_ident(&f.description, from, to),
        ..f.clone()
    }
}

/// Every function name a fixture's module or the fixture config mentions.
fn name_universe(m: &wasm_cpg::frontend::ModuleIR, cfg: &ScanConfig) -> Vec<String> {
    let mut names: BTreeSet<String> = m.functions.iter().map(|f| f.name.clone()).collect();
    names.extend(cfg.sources.iter().chain(&cfg.sinks).cloned());
    names.into_iter().collect()
}

fn subset(universe: &[String], mask: u64) -> Vec<String> {
    universe.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, n)| n.clone()).collect()
}

fn random_config() -> ScanConfig {
    ScanConfig::from_json(
        r#"{"sources": ["ext"], "sinks": ["sink", "ext"], "dangerousFunctions": ["sink"],
            "allocPairs": {"ext": "sink"}, "formatFunctions": {"ext": 0}}"#,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enlarging_sources_and_sinks_never_loses_findings(
        fixture in 0usize..64, small_mask in any::<u64>(), extra in any::<u64>(), grow_sinks in any::<bool>()
    ) {
        let paths = common::all_fixture_paths();
        let path = &paths[fixture % paths.len()];
        let (m, b) = common::build(path);
        let base = common::config();
        let universe = name_universe(&m, &base);
        let small_set = subset(&universe, small_mask);
        let large_set = subset(&universe, small_mask | extra);
        let (small, large) = if grow_sinks {
            (ScanConfig { sinks: small_set, ..base.clone() }, ScanConfig { sinks: large_set, ..base })
        } else {
            (ScanConfig { sources: small_set, ..base.clone() }, ScanConfig { sources: large_set, ..base })
        };
        let ids: &[u8] = if grow_sinks { &[6, 7] } else { &[5, 6, 7] };
        for &id in ids {
            let lo = keys(&run_query(&b.cpg, &small, id));
            let hi = keys(&run_query(&b.cpg, &large, id));
            prop_assert!(lo.is_subset(&hi), "{path} q{id}: {lo:?} not within {hi:?}");
        }
    }

    #[test]
    fn detectors_ignore_edge_types_they_do_not_use(seed in any::<u64>()) {
        let wat = common::gen::random_function_module(&mut ChaCha8Rng::seed_from_u64(seed), 60, 3);
        let (_, b) = build_from_wat(&wat).unwrap();
        let cfg = random_config();
        for id in QUERY_IDS {
            let stripped = keep_edges(&b.cpg, used_edges(id));
            prop_assert_eq!(run_query(&stripped, &cfg, id), run_query(&b.cpg, &cfg, id), "q{}", id);
        }
    }
}

#[test]
fn detectors_ignore_unused_edge_types_on_the_corpus() {
    let cfg = common::config();
    for path in common::all_fixture_paths() {
        let (_, b) = common::build(&path);
        for id in QUERY_IDS {
            let stripped = keep_edges(&b.cpg, used_edges(id));
            assert_eq!(run_query(&stripped, &cfg, id), run_query(&b.cpg, &cfg, id), "{path} q{id}");
        }
    }
}

#[test]
fn every_declared_edge_type_matters_somewhere() {
    // Dropping a declared non-AST type must change some detector's output
    // on some fixture, else the declaration is looser than needed.
    let cfg = common::config();
    let mut graphs: Vec<(String, Cpg)> =
        common::all_fixture_paths().into_iter().map(|p| (p.clone(), common::build(&p).1.cpg)).collect();
    // The corpus passes format strings as direct constants; this one goes
    // through a local, so only the DDG shows it is constant.
    let via_local = r#"(module
      (import "env" "printf" (func $printf (param i32 i32) (result i32)))
      (func $f (local $fmt i32)
        i32.const 16 local.set $fmt
        local.get $fmt i32.const 0 call $printf drop))"#;
    graphs.push(("format via local".to_string(), build_from_wat(via_local).unwrap().1.cpg));
    for id in QUERY_IDS {
        for &ty in used_edges(id).iter().filter(|t| **t != EdgeType::Ast) {
            let fewer: Vec<EdgeType> = used_edges(id).iter().copied().filter(|t| *t != ty).collect();
            let matters =
                graphs.iter().any(|(_, g)| run_query(&keep_edges(g, &fewer), &cfg, id) != run_query(g, &cfg, id));
            assert!(matters, "q{id} does not need {ty:?} on any fixture");
        }
    }
}

#[test]
fn renaming_a_function_renames_the_findings() {
    let cfg = common::config();
    for path in common::all_fixture_paths() {
        let wat = common::read_fixture(&path);
        let (m, b) = build_from_wat(&wat).unwrap();
        let before: Vec<Finding> = QUERY_IDS.flat_map(|id| run_query(&b.cpg, &cfg, id)).collect();
        for f in &m.functions {
            let to = format!("$renamed_{}", f.index);
            let (_, b2) = build_from_wat(&rename_ident(&wat, &f.name, &to)).unwrap();
            let cfg2 = rename_config(&cfg, &f.name, &to);
            let after: Vec<Finding> = QUERY_IDS.flat_map(|id| run_query(&b2.cpg, &cfg2, id)).collect();
            let want: Vec<Finding> = before.iter().map(|x| rename_finding(x, &f.name, &to)).collect();
            assert_eq!(after, want, "{path}: {} -> {to}", f.name);
        }
    }
}

#[test]
fn empty_module_has_no_findings() {
    let (_, b) = build_from_wat("(module)").unwrap();
    for id in QUERY_IDS {
        assert!(run_query(&b.cpg, &common::config(), id).is_empty(), "q{id}");
    }
}

#[test]
fn findings_survive_a_json_round_trip() {
    let cfg = common::config();
    for path in common::all_fixture_paths() {
        let (_, b) = common::build(&path);
        let back = import_json(&to_json_string(&b.cpg)).unwrap();
        for id in QUERY_IDS {
            assert_eq!(run_query(&back, &cfg, id), run_query(&b.cpg, &cfg, id), "{path} q{id}");
        }
    }
}
