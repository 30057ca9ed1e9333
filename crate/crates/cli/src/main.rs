//! `wasm-cpg`: build code property graphs from WAT, run detectors and WQL
//! programs over them, and export them.
//!
//! Exit codes: 0 no findings, 1 findings reported, 2 usage error, 3
//! analysis error.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use wasm_cpg::builders::{build_from_wat, StageTimings};
use wasm_cpg::cpg::{Cpg, EdgeType};
use wasm_cpg::export::{self, ExportManifest, Format};
use wasm_cpg::vuln::{self, Finding, ScanConfig, QUERY_IDS};
use wasm_cpg::wql;

#[derive(Parser)]
#[command(name = "wasm-cpg", version, about = "Code property graphs and vulnerability queries for WebAssembly text")]
struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the graph of a WAT module and write it as JSON.
    Build {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print per-stage construction times on stderr.
        #[arg(long)]
        timing: bool,
    },
    /// Run detectors or WQL programs over a graph JSON file.
    Query {
        cpg: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build a WAT module and query it in one pass.
    Scan {
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        timing: bool,
    },
    /// Convert a graph JSON file to another format.
    Export {
        cpg: PathBuf,
        /// json, dot, datalog or neo4j-csv.
        #[arg(short, long)]
        format: Format,
        /// Output file, or directory for datalog and neo4j-csv.
        #[arg(short, long)]
        output: PathBuf,
        /// DOT only: edge types to draw, e.g. `AST,CFG`.
        #[arg(long, value_delimiter = ',')]
        edges: Option<Vec<String>>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scan configuration (sources, sinks, allocator pairs, ...).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Built-in detector ids, e.g. `1,6,10`.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=10))]
    builtin: Vec<u8>,
    /// WQL program files; run after the built-ins.
    #[arg(long)]
    wql: Vec<PathBuf>,
    /// Findings file (JSON lines); stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Analysis(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Analysis(_) => 3,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Analysis(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Analysis(format!("cannot write to stdout: {e}"))),
    }
}

fn print_timings(t: &StageTimings) {
    let total = t.total().as_secs_f64().max(f64::MIN_POSITIVE);
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    for (name, d) in t.stages() {
        eprintln!("{name:>6}: {:>10.3} ms  {:>5.1}%", ms(d), 100.0 * d.as_secs_f64() / total);
    }
    eprintln!("{:>6}: {:>10.3} ms", "total", ms(t.total()));
}

fn build(path: &Path, timing: bool) -> Result<Cpg, Failure> {
    let src = read(path)?;
    let (_, built) = build_from_wat(&src).map_err(|e| Failure::Analysis(format!("{}: {e}", path.display())))?;
    for w in &built.warnings {
        log::warn!("{w}");
    }
    if timing {
        print_timings(&built.timings);
    }
    Ok(built.cpg)
}

fn load_cpg(path: &Path) -> Result<Cpg, Failure> {
    export::import_json(&read(path)?).map_err(|e| Failure::Analysis(format!("{}: {e}", path.display())))
}

fn run_queries(g: &Cpg, args: &RunArgs) -> Result<u8, Failure> {
    let config = match &args.config {
        Some(p) => ScanConfig::from_json(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => ScanConfig::default(),
    };
    let mut findings: Vec<Finding> = Vec::new();
    let builtins: BTreeSet<u8> = if args.builtin.is_empty() && args.wql.is_empty() {
        QUERY_IDS.collect()
    } else {
        args.builtin.iter().copied().collect()
    };
    findings.extend(vuln::run_all(g, &config, &builtins));
    for path in &args.wql {
        let src = read(path)?;
        let found = wql::run(&src, g, &config, 0).map_err(|e| Failure::Analysis(format!("{}: {e}", path.display())))?;
        findings.extend(found);
    }
    let text: String = findings.iter().map(|f| f.to_json_line() + "\n").collect();
    write_out(args.output.as_deref(), &text)?;
    Ok(u8::from(!findings.is_empty()))
}

fn parse_edge_types(names: &[String]) -> Result<Vec<EdgeType>, Failure> {
    names
        .iter()
        .map(|n| n.to_uppercase().parse::<EdgeType>().map_err(|e| Failure::Usage(e.to_string())))
        .collect()
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Build { input, output, timing } => {
            let g = build(&input, timing)?;
            write_out(output.as_deref(), &export::to_json_string(&g))?;
            Ok(0)
        }
        Command::Query { cpg, run } => run_queries(&load_cpg(&cpg)?, &run),
        Command::Scan { input, run, timing } => run_queries(&build(&input, timing)?, &run),
        Command::Export { cpg, format, output, edges } => {
            let dot_edges = edges.as_deref().map(parse_edge_types).transpose()?;
            let g = load_cpg(&cpg)?;
            let manifest = ExportManifest { format, output, dot_edges };
            let written = export::export(&g, &manifest).map_err(|e| Failure::Analysis(e.to_string()))?;
            for p in written {
                log::info!("wrote {}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Analysis(m) => eprintln!("wasm-cpg: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
