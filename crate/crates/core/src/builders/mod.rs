//! Graph construction passes and the pipeline that runs them in order:
//! AST, CFG, CG, then DDG.

pub mod ast;
pub mod cfg;
pub mod cg;

use std::time::{Duration, Instant};

use crate::cpg::{Cpg, GraphBuilder};
use crate::ddg::{analyze, emit_ddg_edges, EmitError, Metrics};
use crate::error::BuildError;
use crate::frontend::{parse_module, ModuleIR};

pub use ast::{build_ast, AstLowering, FunctionNodes};
pub use cfg::{build_cfg, FlowGraph};
pub use cg::{build_cg, build_signature_index, SignatureIndex};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub parse: Duration,
    pub ast: Duration,
    pub cfg: Duration,
    pub cg: Duration,
    pub ddg: Duration,
}

impl StageTimings {
    pub fn stages(&self) -> [(&'static str, Duration); 5] {
        [("parse", self.parse), ("AST", self.ast), ("CFG", self.cfg), ("CG", self.cg), ("DDG", self.ddg)]
    }

    pub fn total(&self) -> Duration {
        self.stages().iter().map(|(_, d)| *d).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Built {
    pub cpg: Cpg,
    pub lowering: AstLowering,
    pub flows: Vec<FlowGraph>,
    /// Dataflow metrics per function, in function order.
    pub metrics: Vec<Metrics>,
    pub warnings: Vec<String>,
    pub timings: StageTimings,
}

/// Parses WAT text and builds its code property graph.
pub fn build_from_wat(src: &str) -> Result<(ModuleIR, Built), BuildError> {
    let t = Instant::now();
    let module = parse_module(src)?;
    let parse = t.elapsed();
    let mut built = build_cpg(&module)?;
    built.timings.parse = parse;
    Ok((module, built))
}

pub fn build_cpg(module: &ModuleIR) -> Result<Built, BuildError> {
    let mut timings = StageTimings::default();
    let mut g = GraphBuilder::new();

    let t = Instant::now();
    let lowering = build_ast(module, &mut g)?;
    timings.ast = t.elapsed();

    let t = Instant::now();
    let mut flows = Vec::with_capacity(module.functions.len());
    for (f, nodes) in module.functions.iter().zip(&lowering.functions) {
        flows.push(build_cfg(module, f, nodes, &mut g)?);
    }
    timings.cfg = t.elapsed();

    let t = Instant::now();
    let index = build_signature_index(module);
    let warnings = build_cg(module, &lowering, &index, &mut g)?;
    timings.cg = t.elapsed();

    let t = Instant::now();
    let mut metrics = Vec::with_capacity(flows.len());
    for (f, flow) in module.functions.iter().zip(&flows) {
        let dataflow = |message: String| BuildError::Dataflow { function: f.name.clone(), message };
        if f.is_import() {
            metrics.push(Metrics::default());
            continue;
        }
        let analysis = analyze(flow, module.globals.len(), f.local_count()).map_err(|e| dataflow(e.to_string()))?;
        emit_ddg_edges(flow, &analysis, &mut g).map_err(|e| match e {
            EmitError::Graph(g) => BuildError::Graph(g),
            EmitError::Dataflow(d) => dataflow(d.to_string()),
        })?;
        metrics.push(analysis.metrics);
    }
    timings.ddg = t.elapsed();

    Ok(Built { cpg: g.freeze(), lowering, flows, metrics, warnings, timings })
}
