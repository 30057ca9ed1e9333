//! WAT module parser producing [`ModuleIR`].
//!
//! Runs in two passes: the first collects every named entity (types,
//! functions, globals) so bodies may reference functions declared later; the
//! second parses bodies, flattening folded expressions into execution order.

use std::collections::{BTreeMap, HashMap};

use super::arity::validate_function;
use super::error::{FrontendError, Pos};
use super::ir::*;
use super::numbers::{parse_float, parse_int, parse_u32};
use super::opcodes::{memory_op, numeric_op};
use super::sexpr::{read_all, SExpr};

type Result<T> = std::result::Result<T, FrontendError>;

/// Parses WAT source into a module representation.
pub fn parse_module(src: &str) -> Result<ModuleIR> {
    let top = read_all(src)?;
    let (name, fields): (Option<String>, Vec<&SExpr>) = match top.as_slice() {
        [m] if m.head() == Some("module") => {
            let items = m.list().unwrap_or_default();
            let mut i = 1;
            let name = match items.get(1) {
                Some(SExpr::Word(w, _)) if w.starts_with('$') => {
                    i = 2;
                    Some(w.clone())
                }
                _ => None,
            };
            (name, items[i..].iter().collect())
        }
        items => (None, items.iter().collect()),
    };
    let mut collector = Collector::default();
    for field in &fields {
        collector.field(field)?;
    }
    collector.finish(name)
}

fn is_id(w: &str) -> bool {
    w.starts_with('$') && w.len() > 1
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr]> {
    e.list()
        .ok_or_else(|| FrontendError::syntax(e.pos(), format!("expected {what}")))
}

fn expect_str(e: Option<&SExpr>, pos: Pos) -> Result<String> {
    match e {
        Some(SExpr::Str(s, _)) => Ok(s.clone()),
        Some(other) => Err(FrontendError::syntax(other.pos(), "expected a string")),
        None => Err(FrontendError::syntax(pos, "expected a string")),
    }
}

fn val_type(e: &SExpr) -> Result<ValType> {
    e.word()
        .and_then(ValType::parse)
        .ok_or_else(|| FrontendError::syntax(e.pos(), format!("expected a value type, found `{e}`")))
}

struct PendingFunc<'a> {
    ir: FunctionIR,
    body: &'a [SExpr],
    pos: Pos,
}

#[derive(Default)]
struct Collector<'a> {
    types: Vec<(Option<String>, FuncType)>,
    type_names: HashMap<String, u32>,
    funcs: Vec<PendingFunc<'a>>,
    func_names: HashMap<String, u32>,
    globals: Vec<GlobalIR>,
    global_names: HashMap<String, u32>,
    table_name: Option<String>,
    table_slots: BTreeMap<u32, (&'a SExpr, Pos)>,
    exports: Vec<(String, &'a SExpr, Pos)>,
    start: Option<(&'a SExpr, Pos)>,
}

impl<'a> Collector<'a> {
    fn field(&mut self, field: &'a SExpr) -> Result<()> {
        let items = expect_list(field, "a module field")?;
        let pos = field.pos();
        match field.head() {
            Some("type") => self.type_field(items, pos),
            Some("func") => self.func_field(items, pos, None),
            Some("import") => self.import_field(items, pos),
            Some("global") => self.global_field(items, pos, None),
            Some("table") => self.table_field(items, pos),
            Some("elem") => self.elem_field(items, pos),
            Some("export") => {
                let name = expect_str(items.get(1), pos)?;
                let desc = items
                    .get(2)
                    .ok_or_else(|| FrontendError::syntax(pos, "export without descriptor"))?;
                self.exports.push((name, desc, pos));
                Ok(())
            }
            Some("start") => {
                let f = items
                    .get(1)
                    .ok_or_else(|| FrontendError::syntax(pos, "start without function"))?;
                self.start = Some((f, pos));
                Ok(())
            }
            Some("memory") | Some("data") => Ok(()),
            Some(other) => Err(FrontendError::syntax(pos, format!("unsupported module field `{other}`"))),
            None => Err(FrontendError::syntax(pos, "expected a module field")),
        }
    }

    fn type_field(&mut self, items: &[SExpr], pos: Pos) -> Result<()> {
        let mut i = 1;
        let name = match items.get(i) {
            Some(SExpr::Word(w, _)) if is_id(w) => {
                i += 1;
                Some(w.clone())
            }
            _ => None,
        };
        let func = items
            .get(i)
            .filter(|e| e.head() == Some("func"))
            .ok_or_else(|| FrontendError::syntax(pos, "type must be a func type"))?;
        let mut ty = FuncType::default();
        for part in &expect_list(func, "func type")?[1..] {
            match part.head() {
                Some("param") => {
                    let (_, types) = param_list(part)?;
                    ty.params.extend(types);
                }
                Some("result") => ty.results.extend(result_list(part)?),
                _ => return Err(FrontendError::syntax(part.pos(), "unexpected item in func type")),
            }
        }
        if ty.results.len() > 1 {
            return Err(FrontendError::unsupported(pos, "multi-value result"));
        }
        let index = self.types.len() as u32;
        if let Some(n) = &name {
            if self.type_names.insert(n.clone(), index).is_some() {
                return Err(FrontendError::syntax(pos, format!("duplicate type {n}")));
            }
        }
        self.types.push((name, ty));
        Ok(())
    }

    fn lookup_type(&self, e: &SExpr) -> Result<FuncType> {
        let w = e
            .word()
            .ok_or_else(|| FrontendError::syntax(e.pos(), "expected a type index"))?;
        let index = if is_id(w) {
            *self
                .type_names
                .get(w)
                .ok_or_else(|| FrontendError::unresolved(e.pos(), "type", w))?
        } else {
            parse_u32(w).ok_or_else(|| FrontendError::syntax(e.pos(), "expected a type index"))?
        };
        self.types
            .get(index as usize)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| FrontendError::unresolved(e.pos(), "type", w))
    }

    /// Parses a function header, either a definition or an import.
    fn func_field(
        &mut self,
        items: &'a [SExpr],
        pos: Pos,
        import: Option<(String, String)>,
    ) -> Result<()> {
        let mut i = 1;
        let mut name = None;
        if let Some(SExpr::Word(w, _)) = items.get(i) {
            if is_id(w) {
                name = Some(w.clone());
                i += 1;
            }
        }
        let mut import = import;
        let mut exports = Vec::new();
        let mut type_use = None;
        let mut params: Vec<(Option<String>, ValType)> = Vec::new();
        let mut results = Vec::new();
        let mut locals: Vec<(Option<String>, ValType)> = Vec::new();
        while let Some(item) = items.get(i) {
            match item.head() {
                Some("export") => {
                    let l = expect_list(item, "export")?;
                    exports.push(expect_str(l.get(1), item.pos())?);
                }
                Some("import") => {
                    let l = expect_list(item, "import")?;
                    import = Some((expect_str(l.get(1), item.pos())?, expect_str(l.get(2), item.pos())?));
                }
                Some("type") => {
                    let l = expect_list(item, "type use")?;
                    let t = l
                        .get(1)
                        .ok_or_else(|| FrontendError::syntax(item.pos(), "type use without index"))?;
                    type_use = Some(self.lookup_type(t)?);
                }
                Some("param") => {
                    let (n, types) = param_list(item)?;
                    match n {
                        Some(n) => params.push((Some(n), types[0])),
                        None => params.extend(types.into_iter().map(|t| (None, t))),
                    }
                }
                Some("result") => results.extend(result_list(item)?),
                Some("local") => {
                    let (n, types) = param_list(item)?;
                    match n {
                        Some(n) => locals.push((Some(n), types[0])),
                        None => locals.extend(types.into_iter().map(|t| (None, t))),
                    }
                }
                _ => break,
            }
            i += 1;
        }
        if let Some(t) = type_use {
            if params.is_empty() && results.is_empty() {
                params = t.params.iter().map(|&ty| (None, ty)).collect();
                results = t.results.clone();
            } else {
                let inline: Vec<ValType> = params.iter().map(|p| p.1).collect();
                if inline != t.params || results != t.results {
                    return Err(FrontendError::syntax(pos, "inline signature does not match type use"));
                }
            }
        }
        if results.len() > 1 {
            return Err(FrontendError::unsupported(pos, "multi-value result"));
        }
        let index = self.funcs.len() as u32;
        if import.is_some() && self.funcs.iter().any(|f| f.ir.import.is_none()) {
            return Err(FrontendError::syntax(pos, "function imports must precede definitions"));
        }
        if import.is_some() && (!locals.is_empty() || items.len() > i) {
            return Err(FrontendError::syntax(pos, "imported function cannot have a body"));
        }
        let name = name.unwrap_or_else(|| format!("${index}"));
        if self.func_names.insert(name.clone(), index).is_some() {
            return Err(FrontendError::syntax(pos, format!("duplicate function {name}")));
        }
        let mut seen = HashMap::new();
        let mut named = |list: Vec<(Option<String>, ValType)>, base: usize| -> Result<Vec<Param>> {
            list.into_iter()
                .enumerate()
                .map(|(k, (n, ty))| {
                    let n = n.unwrap_or_else(|| format!("${}", base + k));
                    if seen.insert(n.clone(), ()).is_some() {
                        return Err(FrontendError::syntax(pos, format!("duplicate local {n}")));
                    }
                    Ok(Param { name: n, ty })
                })
                .collect()
        };
        let nparams = params.len();
        let params = named(params, 0)?;
        let locals = named(locals, nparams)?;
        self.funcs.push(PendingFunc {
            ir: FunctionIR {
                name,
                index,
                params,
                locals,
                results,
                body: Vec::new(),
                import,
                exports,
            },
            body: &items[i..],
            pos,
        });
        Ok(())
    }

    fn import_field(&mut self, items: &'a [SExpr], pos: Pos) -> Result<()> {
        let module = expect_str(items.get(1), pos)?;
        let field = expect_str(items.get(2), pos)?;
        let desc = items
            .get(3)
            .ok_or_else(|| FrontendError::syntax(pos, "import without descriptor"))?;
        let desc_items = expect_list(desc, "import descriptor")?;
        match desc.head() {
            Some("func") => self.func_field(desc_items, desc.pos(), Some((module, field))),
            Some("global") => self.global_field(desc_items, desc.pos(), Some((module, field))),
            Some("memory") | Some("table") => Ok(()),
            _ => Err(FrontendError::syntax(desc.pos(), "unsupported import descriptor")),
        }
    }

    fn global_field(
        &mut self,
        items: &[SExpr],
        pos: Pos,
        import: Option<(String, String)>,
    ) -> Result<()> {
        let mut i = 1;
        let mut name = None;
        if let Some(SExpr::Word(w, _)) = items.get(i) {
            if is_id(w) {
                name = Some(w.clone());
                i += 1;
            }
        }
        let mut import = import;
        while let Some(item) = items.get(i) {
            match item.head() {
                Some("export") => i += 1,
                Some("import") => {
                    let l = expect_list(item, "import")?;
                    import = Some((expect_str(l.get(1), pos)?, expect_str(l.get(2), pos)?));
                    i += 1;
                }
                _ => break,
            }
        }
        let ty_expr = items
            .get(i)
            .ok_or_else(|| FrontendError::syntax(pos, "global without type"))?;
        let (ty, mutable) = if ty_expr.head() == Some("mut") {
            let l = expect_list(ty_expr, "mut")?;
            let t = l
                .get(1)
                .ok_or_else(|| FrontendError::syntax(ty_expr.pos(), "mut without type"))?;
            (val_type(t)?, true)
        } else {
            (val_type(ty_expr)?, false)
        };
        let init = items.get(i + 1).and_then(|e| {
            let l = e.list()?;
            let op = l.first()?.word()?;
            let lit = l.get(1)?.word()?;
            const_value(op, lit)
        });
        let index = self.globals.len() as u32;
        let name = name.unwrap_or_else(|| format!("${index}"));
        if self.global_names.insert(name.clone(), index).is_some() {
            return Err(FrontendError::syntax(pos, format!("duplicate global {name}")));
        }
        self.globals.push(GlobalIR { name, ty, mutable, import, init });
        Ok(())
    }

    fn table_field(&mut self, items: &'a [SExpr], pos: Pos) -> Result<()> {
        let mut i = 1;
        if let Some(SExpr::Word(w, _)) = items.get(1) {
            if is_id(w) {
                self.table_name = Some(w.clone());
                i += 1;
            }
        }
        for item in &items[i..] {
            if item.head() == Some("elem") {
                let refs = &expect_list(item, "elem")?[1..];
                for (k, r) in refs.iter().enumerate() {
                    self.table_slots.insert(k as u32, (r, r.pos()));
                }
            }
        }
        let _ = pos;
        Ok(())
    }

    fn elem_field(&mut self, items: &'a [SExpr], pos: Pos) -> Result<()> {
        let mut i = 1;
        if let Some(SExpr::Word(w, _)) = items.get(i) {
            if is_id(w) {
                i += 1;
            }
        }
        if items.get(i).and_then(SExpr::word) == Some("declare") {
            return Ok(());
        }
        if items.get(i).and_then(SExpr::head) == Some("table") {
            i += 1;
        }
        let offset_expr = items
            .get(i)
            .ok_or_else(|| FrontendError::syntax(pos, "elem without offset"))?;
        let offset_list = if offset_expr.head() == Some("offset") {
            let l = expect_list(offset_expr, "offset")?;
            l.get(1)
                .and_then(SExpr::list)
                .ok_or_else(|| FrontendError::syntax(offset_expr.pos(), "malformed offset"))?
        } else {
            expect_list(offset_expr, "offset expression")?
        };
        let offset = match offset_list {
            [SExpr::Word(op, _), SExpr::Word(v, _)] if op == "i32.const" => parse_int(v, 32)
                .map(|v| v as u32)
                .ok_or_else(|| FrontendError::syntax(offset_expr.pos(), "malformed offset"))?,
            _ => return Err(FrontendError::syntax(offset_expr.pos(), "elem offset must be an i32.const")),
        };
        i += 1;
        if matches!(items.get(i).and_then(SExpr::word), Some("func") | Some("funcref")) {
            i += 1;
        }
        for (k, r) in items[i..].iter().enumerate() {
            self.table_slots.insert(offset + k as u32, (r, r.pos()));
        }
        Ok(())
    }

    fn func_index(&self, e: &SExpr) -> Result<u32> {
        let w = e
            .word()
            .ok_or_else(|| FrontendError::syntax(e.pos(), "expected a function index"))?;
        resolve(w, &self.func_names, self.funcs.len(), "function", e.pos())
    }

    fn finish(self, name: Option<String>) -> Result<ModuleIR> {
        let scope = ModuleScope {
            type_names: &self.type_names,
            types: &self.types,
            func_names: &self.func_names,
            func_sigs: self.funcs.iter().map(|f| f.ir.signature()).collect(),
            func_display: self.funcs.iter().map(|f| f.ir.name.clone()).collect(),
            global_names: &self.global_names,
            global_display: self.globals.iter().map(|g| g.name.clone()).collect(),
        };
        let mut table = Vec::new();
        for (r, pos) in self.table_slots.values() {
            let r: &SExpr = r;
            let idx = if r.head() == Some("ref.func") {
                let l = expect_list(r, "ref.func")?;
                self.func_index(l.get(1).ok_or_else(|| FrontendError::syntax(*pos, "ref.func without index"))?)?
            } else {
                self.func_index(r)?
            };
            table.push(idx);
        }
        let mut functions = Vec::with_capacity(self.funcs.len());
        let mut positions = Vec::with_capacity(self.funcs.len());
        for pf in &self.funcs {
            let mut ir = pf.ir.clone();
            if ir.import.is_none() {
                let mut bp = BodyParser::new(&scope, &ir);
                let mut cursor = 0;
                let mut body = Vec::new();
                if let Some((w, p)) = bp.parse_seq(pf.body, &mut cursor, &mut body, &[])? {
                    return Err(FrontendError::syntax(p, format!("unexpected `{w}`")));
                }
                ir.body = body;
            }
            functions.push(ir);
            positions.push(pf.pos);
        }
        let mut module = ModuleIR {
            name,
            functions,
            signatures: self.types.clone(),
            globals: self.globals.clone(),
            table,
            start: None,
        };
        for (ename, desc, pos) in &self.exports {
            if desc.head() == Some("func") {
                let l = expect_list(desc, "export descriptor")?;
                let f = self.func_index(
                    l.get(1)
                        .ok_or_else(|| FrontendError::syntax(*pos, "export without index"))?,
                )?;
                module.functions[f as usize].exports.push(ename.clone());
            }
        }
        if let Some((f, _)) = self.start {
            module.start = Some(self.func_index(f)?);
        }
        for (f, pos) in module.functions.iter().zip(&positions) {
            validate_function(&module, f)
                .map_err(|msg| FrontendError::invalid(*pos, format!("{}: {msg}", f.name)))?;
        }
        Ok(module)
    }
}

fn param_list(e: &SExpr) -> Result<(Option<String>, Vec<ValType>)> {
    let items = expect_list(e, "param list")?;
    match items.get(1) {
        Some(SExpr::Word(w, _)) if is_id(w) => {
            if items.len() != 3 {
                return Err(FrontendError::syntax(e.pos(), "named param takes exactly one type"));
            }
            Ok((Some(w.clone()), vec![val_type(&items[2])?]))
        }
        _ => Ok((None, items[1..].iter().map(val_type).collect::<Result<_>>()?)),
    }
}

fn result_list(e: &SExpr) -> Result<Vec<ValType>> {
    expect_list(e, "result list")?[1..].iter().map(val_type).collect()
}

fn resolve(w: &str, names: &HashMap<String, u32>, len: usize, what: &'static str, pos: Pos) -> Result<u32> {
    if is_id(w) {
        names
            .get(w)
            .copied()
            .ok_or_else(|| FrontendError::unresolved(pos, what, w))
    } else {
        let i = parse_u32(w).ok_or_else(|| FrontendError::syntax(pos, format!("expected a {what} index")))?;
        if (i as usize) < len {
            Ok(i)
        } else {
            Err(FrontendError::unresolved(pos, what, w))
        }
    }
}

fn const_value(op: &str, lit: &str) -> Option<ConstValue> {
    Some(match op {
        "i32.const" => ConstValue::I32(parse_int(lit, 32)? as u32 as i32),
        "i64.const" => ConstValue::I64(parse_int(lit, 64)? as i64),
        "f32.const" => ConstValue::F32((parse_float(lit)? as f32).to_bits()),
        "f64.const" => ConstValue::F64(parse_float(lit)?.to_bits()),
        _ => return None,
    })
}

struct ModuleScope<'a> {
    type_names: &'a HashMap<String, u32>,
    types: &'a [(Option<String>, FuncType)],
    func_names: &'a HashMap<String, u32>,
    func_sigs: Vec<FuncType>,
    func_display: Vec<String>,
    global_names: &'a HashMap<String, u32>,
    global_display: Vec<String>,
}

struct LabelFrame {
    name: String,
    arity: u32,
}

struct BodyParser<'s> {
    scope: &'s ModuleScope<'s>,
    func_name: String,
    func_results: u32,
    local_names: Vec<String>,
    locals: HashMap<String, u32>,
    labels: Vec<LabelFrame>,
    order: u32,
    synth: u32,
}

enum BlockKind {
    Block,
    Loop,
}

impl<'s> BodyParser<'s> {
    fn new(scope: &'s ModuleScope<'s>, f: &FunctionIR) -> Self {
        let local_names: Vec<String> = f
            .params
            .iter()
            .chain(&f.locals)
            .map(|p| p.name.clone())
            .collect();
        let locals = local_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        BodyParser {
            scope,
            func_name: f.name.clone(),
            func_results: f.results.len() as u32,
            local_names,
            locals,
            labels: Vec::new(),
            order: 0,
            synth: 0,
        }
    }

    fn next_order(&mut self) -> u32 {
        let o = self.order;
        self.order += 1;
        o
    }

    /// Parses instructions until the end of `items` or one of `terminators`
    /// appears as a plain word; returns the terminator found.
    fn parse_seq(
        &mut self,
        items: &[SExpr],
        cursor: &mut usize,
        out: &mut Vec<Instruction>,
        terminators: &[&str],
    ) -> Result<Option<(String, Pos)>> {
        while let Some(item) = items.get(*cursor) {
            *cursor += 1;
            match item {
                SExpr::List(list, pos) => self.folded(list, *pos, out)?,
                SExpr::Word(w, pos) => {
                    if terminators.contains(&w.as_str()) {
                        return Ok(Some((w.clone(), *pos)));
                    }
                    self.plain(w, *pos, items, cursor, out)?;
                }
                SExpr::Str(_, pos) => return Err(FrontendError::syntax(*pos, "unexpected string")),
            }
        }
        Ok(None)
    }

    fn take_label(&mut self, items: &[SExpr], cursor: &mut usize, prefix: &str) -> String {
        if let Some(SExpr::Word(w, _)) = items.get(*cursor) {
            if is_id(w) {
                *cursor += 1;
                return w.clone();
            }
        }
        let n = self.synth;
        self.synth += 1;
        format!("${prefix}{n}")
    }

    /// Skips an optional repeated label after `end`/`else`.
    fn skip_end_label(&self, items: &[SExpr], cursor: &mut usize, label: &str) -> Result<()> {
        if let Some(SExpr::Word(w, pos)) = items.get(*cursor) {
            if is_id(w) {
                if w != label {
                    return Err(FrontendError::syntax(*pos, format!("mismatched label {w}, expected {label}")));
                }
                *cursor += 1;
            }
        }
        Ok(())
    }

    fn block_type(&self, items: &[SExpr], cursor: &mut usize) -> Result<Option<ValType>> {
        let mut result = None;
        let mut count = 0;
        while let Some(item) = items.get(*cursor) {
            match item.head() {
                Some("result") => {
                    for t in result_list(item)? {
                        result = Some(t);
                        count += 1;
                    }
                }
                Some("type") => {
                    let l = expect_list(item, "type use")?;
                    let t = l
                        .get(1)
                        .ok_or_else(|| FrontendError::syntax(item.pos(), "type use without index"))?;
                    let w = t.word().unwrap_or_default();
                    let idx = resolve(w, self.scope.type_names, self.scope.types.len(), "type", t.pos())?;
                    let ty = &self.scope.types[idx as usize].1;
                    if !ty.params.is_empty() {
                        return Err(FrontendError::unsupported(item.pos(), "block parameters"));
                    }
                    for &t in &ty.results {
                        result = Some(t);
                        count += 1;
                    }
                }
                Some("param") => return Err(FrontendError::unsupported(item.pos(), "block parameters")),
                _ => break,
            }
            *cursor += 1;
        }
        if count > 1 {
            return Err(FrontendError::unsupported(items[*cursor - 1].pos(), "multi-value block"));
        }
        Ok(result)
    }

    fn plain(
        &mut self,
        op: &str,
        pos: Pos,
        items: &[SExpr],
        cursor: &mut usize,
        out: &mut Vec<Instruction>,
    ) -> Result<()> {
        match op {
            "block" | "loop" => {
                let kind = if op == "block" { BlockKind::Block } else { BlockKind::Loop };
                let label = self.take_label(items, cursor, if op == "block" { "block" } else { "loop" });
                let result = self.block_type(items, cursor)?;
                let order = self.next_order();
                self.push_label(&label, &kind, result);
                let mut body = Vec::new();
                match self.parse_seq(items, cursor, &mut body, &["end"])? {
                    Some(_) => self.skip_end_label(items, cursor, &label)?,
                    None => return Err(FrontendError::syntax(pos, format!("`{op}` without matching `end`"))),
                }
                self.labels.pop();
                let b = Block { label, result, body };
                let kind = match kind {
                    BlockKind::Block => InstrKind::Block(b),
                    BlockKind::Loop => InstrKind::Loop(b),
                };
                out.push(Instruction { kind, order });
            }
            "if" => {
                let label = self.take_label(items, cursor, "if");
                let result = self.block_type(items, cursor)?;
                let order = self.next_order();
                self.push_label(&label, &BlockKind::Block, result);
                let mut then_body = Vec::new();
                let end = self.parse_seq(items, cursor, &mut then_body, &["else", "end"])?;
                let else_body = match end {
                    Some((w, _)) if w == "else" => {
                        self.skip_end_label(items, cursor, &label)?;
                        let mut else_body = Vec::new();
                        if self.parse_seq(items, cursor, &mut else_body, &["end"])?.is_none() {
                            return Err(FrontendError::syntax(pos, "`if` without matching `end`"));
                        }
                        self.skip_end_label(items, cursor, &label)?;
                        Some(else_body)
                    }
                    Some(_) => {
                        self.skip_end_label(items, cursor, &label)?;
                        None
                    }
                    None => return Err(FrontendError::syntax(pos, "`if` without matching `end`")),
                };
                self.labels.pop();
                out.push(Instruction {
                    kind: InstrKind::If(IfBlock { label, result, then_body, else_body }),
                    order,
                });
            }
            "else" | "end" | "then" => {
                return Err(FrontendError::syntax(pos, format!("unexpected `{op}`")));
            }
            _ => {
                let kind = self.simple(op, pos, items, cursor)?;
                let order = self.next_order();
                out.push(Instruction { kind, order });
            }
        }
        Ok(())
    }

    fn push_label(&mut self, label: &str, kind: &BlockKind, result: Option<ValType>) {
        let arity = match kind {
            BlockKind::Loop => 0,
            BlockKind::Block => result.is_some() as u32,
        };
        self.labels.push(LabelFrame { name: label.to_string(), arity });
    }

    fn folded(&mut self, list: &[SExpr], pos: Pos, out: &mut Vec<Instruction>) -> Result<()> {
        let op = list
            .first()
            .and_then(SExpr::word)
            .ok_or_else(|| FrontendError::syntax(pos, "expected an instruction"))?;
        let mut cursor = 1;
        match op {
            "block" | "loop" => {
                let kind = if op == "block" { BlockKind::Block } else { BlockKind::Loop };
                let label = self.take_label(list, &mut cursor, if op == "block" { "block" } else { "loop" });
                let result = self.block_type(list, &mut cursor)?;
                let order = self.next_order();
                self.push_label(&label, &kind, result);
                let mut body = Vec::new();
                if let Some((w, p)) = self.parse_seq(list, &mut cursor, &mut body, &[])? {
                    return Err(FrontendError::syntax(p, format!("unexpected `{w}`")));
                }
                self.labels.pop();
                let b = Block { label, result, body };
                let kind = match kind {
                    BlockKind::Block => InstrKind::Block(b),
                    BlockKind::Loop => InstrKind::Loop(b),
                };
                out.push(Instruction { kind, order });
            }
            "if" => {
                let label = self.take_label(list, &mut cursor, "if");
                let result = self.block_type(list, &mut cursor)?;
                while let Some(item) = list.get(cursor) {
                    if item.head() == Some("then") {
                        break;
                    }
                    let l = expect_list(item, "a folded condition")?;
                    self.folded(l, item.pos(), out)?;
                    cursor += 1;
                }
                let then = list
                    .get(cursor)
                    .ok_or_else(|| FrontendError::syntax(pos, "folded `if` without `then`"))?;
                let order = self.next_order();
                self.push_label(&label, &BlockKind::Block, result);
                let mut then_body = Vec::new();
                let mut c = 1;
                self.parse_seq(expect_list(then, "then")?, &mut c, &mut then_body, &[])?;
                let else_body = match list.get(cursor + 1) {
                    Some(e) if e.head() == Some("else") => {
                        let mut body = Vec::new();
                        let mut c = 1;
                        self.parse_seq(expect_list(e, "else")?, &mut c, &mut body, &[])?;
                        Some(body)
                    }
                    Some(other) => return Err(FrontendError::syntax(other.pos(), "unexpected item after `then`")),
                    None => None,
                };
                self.labels.pop();
                out.push(Instruction {
                    kind: InstrKind::If(IfBlock { label, result, then_body, else_body }),
                    order,
                });
            }
            "then" | "else" | "end" => {
                return Err(FrontendError::syntax(pos, format!("unexpected `{op}`")));
            }
            _ => {
                let kind = self.simple(op, pos, list, &mut cursor)?;
                for operand in &list[cursor..] {
                    let l = expect_list(operand, "a folded operand")?;
                    self.folded(l, operand.pos(), out)?;
                }
                let order = self.next_order();
                out.push(Instruction { kind, order });
            }
        }
        Ok(())
    }

    fn word_at<'i>(&self, items: &'i [SExpr], cursor: &mut usize, pos: Pos, what: &str) -> Result<(&'i str, Pos)> {
        match items.get(*cursor) {
            Some(SExpr::Word(w, p)) => {
                *cursor += 1;
                Ok((w, *p))
            }
            _ => Err(FrontendError::syntax(pos, format!("expected {what}"))),
        }
    }

    fn local(&self, items: &[SExpr], cursor: &mut usize, pos: Pos) -> Result<LocalRef> {
        let (w, p) = self.word_at(items, cursor, pos, "a local index")?;
        let index = resolve(w, &self.locals, self.local_names.len(), "local", p)?;
        Ok(LocalRef { index, name: self.local_names[index as usize].clone() })
    }

    fn global(&self, items: &[SExpr], cursor: &mut usize, pos: Pos) -> Result<GlobalRef> {
        let (w, p) = self.word_at(items, cursor, pos, "a global index")?;
        let index = resolve(w, self.scope.global_names, self.scope.global_display.len(), "global", p)?;
        Ok(GlobalRef { index, name: self.scope.global_display[index as usize].clone() })
    }

    fn label_word(&self, w: &str, p: Pos) -> Result<LabelRef> {
        let depth = if is_id(w) {
            self.labels
                .iter()
                .rev()
                .position(|l| l.name == w)
                .ok_or_else(|| FrontendError::unresolved(p, "label", w))? as u32
        } else {
            let d = parse_u32(w).ok_or_else(|| FrontendError::syntax(p, "expected a label"))?;
            if d as usize > self.labels.len() {
                return Err(FrontendError::unresolved(p, "label", w));
            }
            d
        };
        if depth as usize == self.labels.len() {
            return Ok(LabelRef { name: self.func_name.clone(), depth, arity: self.func_results });
        }
        let frame = &self.labels[self.labels.len() - 1 - depth as usize];
        Ok(LabelRef { name: frame.name.clone(), depth, arity: frame.arity })
    }

    fn label(&self, items: &[SExpr], cursor: &mut usize, pos: Pos) -> Result<LabelRef> {
        let (w, p) = self.word_at(items, cursor, pos, "a label")?;
        self.label_word(w, p)
    }

    fn mem_arg(&self, items: &[SExpr], cursor: &mut usize, natural: u32) -> Result<MemArg> {
        let mut arg = MemArg { offset: 0, align: natural };
        while let Some(SExpr::Word(w, p)) = items.get(*cursor) {
            if let Some(v) = w.strip_prefix("offset=") {
                arg.offset = parse_u32(v).ok_or_else(|| FrontendError::syntax(*p, "malformed offset"))?;
            } else if let Some(v) = w.strip_prefix("align=") {
                let a = parse_u32(v).ok_or_else(|| FrontendError::syntax(*p, "malformed alignment"))?;
                if !a.is_power_of_two() {
                    return Err(FrontendError::syntax(*p, "alignment must be a power of two"));
                }
                arg.align = a.trailing_zeros();
            } else {
                break;
            }
            *cursor += 1;
        }
        Ok(arg)
    }

    /// Parses a non-structured instruction and its immediates.
    fn simple(&mut self, op: &str, pos: Pos, items: &[SExpr], cursor: &mut usize) -> Result<InstrKind> {
        Ok(match op {
            "i32.const" | "i64.const" | "f32.const" | "f64.const" => {
                let (w, p) = self.word_at(items, cursor, pos, "a constant")?;
                InstrKind::Const(
                    const_value(op, w)
                        .ok_or_else(|| FrontendError::syntax(p, format!("malformed constant `{w}`")))?,
                )
            }
            "drop" => InstrKind::Drop,
            "select" => {
                if items.get(*cursor).and_then(SExpr::head) == Some("result") {
                    *cursor += 1;
                }
                InstrKind::Select
            }
            "local.get" => InstrKind::LocalGet(self.local(items, cursor, pos)?),
            "local.set" => InstrKind::LocalSet(self.local(items, cursor, pos)?),
            "local.tee" => InstrKind::LocalTee(self.local(items, cursor, pos)?),
            "global.get" => InstrKind::GlobalGet(self.global(items, cursor, pos)?),
            "global.set" => InstrKind::GlobalSet(self.global(items, cursor, pos)?),
            "memory.size" | "memory.grow" => {
                if let Some(SExpr::Word(w, _)) = items.get(*cursor) {
                    if w == "0" {
                        *cursor += 1;
                    }
                }
                if op == "memory.size" {
                    InstrKind::MemorySize
                } else {
                    InstrKind::MemoryGrow
                }
            }
            "nop" => InstrKind::Nop,
            "unreachable" => InstrKind::Unreachable,
            "return" => InstrKind::Return,
            "br" => InstrKind::Br(self.label(items, cursor, pos)?),
            "br_if" => InstrKind::BrIf(self.label(items, cursor, pos)?),
            "br_table" => {
                let mut labels = Vec::new();
                while let Some(SExpr::Word(w, p)) = items.get(*cursor) {
                    if !(is_id(w) || parse_u32(w).is_some()) {
                        break;
                    }
                    labels.push(self.label_word(w, *p)?);
                    *cursor += 1;
                }
                let default = labels
                    .pop()
                    .ok_or_else(|| FrontendError::syntax(pos, "br_table without labels"))?;
                InstrKind::BrTable { targets: labels, default }
            }
            "call" => {
                let (w, p) = self.word_at(items, cursor, pos, "a function index")?;
                let index = resolve(w, self.scope.func_names, self.scope.func_sigs.len(), "function", p)?;
                InstrKind::Call(FuncRef { index, name: self.scope.func_display[index as usize].clone() })
            }
            "call_indirect" => {
                if let Some(SExpr::Word(w, _)) = items.get(*cursor) {
                    if is_id(w) || parse_u32(w).is_some() {
                        *cursor += 1;
                    }
                }
                let mut type_name = None;
                let mut declared = None;
                let mut inline = FuncType::default();
                let mut has_inline = false;
                while let Some(item) = items.get(*cursor) {
                    match item.head() {
                        Some("type") => {
                            let l = expect_list(item, "type use")?;
                            let t = l
                                .get(1)
                                .ok_or_else(|| FrontendError::syntax(item.pos(), "type use without index"))?;
                            let w = t.word().unwrap_or_default();
                            let idx = resolve(w, self.scope.type_names, self.scope.types.len(), "type", t.pos())?;
                            type_name = Some(w.to_string());
                            declared = Some(self.scope.types[idx as usize].1.clone());
                        }
                        Some("param") => {
                            let (n, types) = param_list(item)?;
                            if n.is_some() {
                                return Err(FrontendError::syntax(item.pos(), "call_indirect params cannot be named"));
                            }
                            inline.params.extend(types);
                            has_inline = true;
                        }
                        Some("result") => {
                            inline.results.extend(result_list(item)?);
                            has_inline = true;
                        }
                        _ => break,
                    }
                    *cursor += 1;
                }
                let ty = match (declared, has_inline) {
                    (Some(d), true) if d != inline => {
                        return Err(FrontendError::syntax(pos, "inline signature does not match type use"));
                    }
                    (Some(d), _) => d,
                    (None, _) => inline,
                };
                if ty.results.len() > 1 {
                    return Err(FrontendError::unsupported(pos, "multi-value result"));
                }
                InstrKind::CallIndirect { ty, type_name }
            }
            _ => {
                if let Some(info) = numeric_op(op) {
                    InstrKind::Numeric(info)
                } else if let Some(info) = memory_op(op) {
                    let arg = self.mem_arg(items, cursor, info.natural_align())?;
                    if info.is_store {
                        InstrKind::Store(info, arg)
                    } else {
                        InstrKind::Load(info, arg)
                    }
                } else {
                    return Err(FrontendError::unsupported(pos, op));
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::error::FrontendErrorKind;

    fn body_mnemonics(seq: &[Instruction]) -> Vec<&'static str> {
        seq.iter().map(Instruction::mnemonic).collect()
    }

    #[test]
    fn empty_module() {
        let m = parse_module("(module)").unwrap();
        assert!(m.functions.is_empty());
        assert!(m.globals.is_empty());
    }

    #[test]
    fn folded_expressions_flatten_in_execution_order() {
        let m = parse_module(
            "(module (func $f (param $a i32) (result i32)
               (i32.add (local.get $a) (i32.mul (i32.const 2) (i32.const 3)))))",
        )
        .unwrap();
        let f = &m.functions[0];
        assert_eq!(
            body_mnemonics(&f.body),
            ["local.get", "i32.const", "i32.const", "i32.mul", "i32.add"]
        );
        let orders: Vec<u32> = f.body.iter().map(|i| i.order).collect();
        assert_eq!(orders, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn folded_if_condition_precedes_if() {
        let m = parse_module(
            "(module (func $f (param i32) (result i32)
               (if (result i32) (local.get 0) (then (i32.const 1)) (else (i32.const 2)))))",
        )
        .unwrap();
        let f = &m.functions[0];
        assert_eq!(body_mnemonics(&f.body), ["local.get", "if"]);
        let InstrKind::If(ib) = &f.body[1].kind else { panic!() };
        assert_eq!(ib.result, Some(ValType::I32));
        assert_eq!(ib.then_body[0].order, 2);
        assert_eq!(ib.else_body.as_ref().unwrap()[0].order, 3);
        assert_eq!(f.params[0].name, "$0");
    }

    #[test]
    fn labels_resolve_by_name_and_depth() {
        let m = parse_module(
            "(module (func $f
               block $outer
                 loop $inner
                   (br_if $outer (i32.const 0))
                   br 0
                   br 2
                 end
               end))",
        )
        .unwrap();
        let InstrKind::Block(b) = &m.functions[0].body[0].kind else { panic!() };
        let InstrKind::Loop(l) = &b.body[0].kind else { panic!() };
        let InstrKind::BrIf(t) = &l.body[1].kind else { panic!() };
        assert_eq!((t.name.as_str(), t.depth), ("$outer", 1));
        let InstrKind::Br(t) = &l.body[2].kind else { panic!() };
        assert_eq!((t.name.as_str(), t.depth), ("$inner", 0));
        let InstrKind::Br(t) = &l.body[3].kind else { panic!() };
        assert_eq!((t.name.as_str(), t.depth), ("$f", 2));
    }

    #[test]
    fn imports_exports_table_and_types() {
        let m = parse_module(
            r#"(module
                 (type $t (func (param i32) (result i32)))
                 (import "env" "read" (func $read (param i32) (result i32)))
                 (global $sp (mut i32) (i32.const 1024))
                 (table 2 funcref)
                 (elem (i32.const 0) $a $b)
                 (func $a (type $t) local.get 0)
                 (func $b (export "b") (param i32) (result i32)
                   (call_indirect (type $t) (local.get 0) (i32.const 1)))
                 (export "a" (func $a)))"#,
        )
        .unwrap();
        assert_eq!(m.functions.len(), 3);
        assert!(m.functions[0].is_import());
        assert_eq!(m.table, vec![1, 2]);
        assert_eq!(m.functions[1].exports, vec!["a".to_string()]);
        assert_eq!(m.functions[2].exports, vec!["b".to_string()]);
        assert_eq!(m.globals[0].init, Some(ConstValue::I32(1024)));
        let InstrKind::CallIndirect { ty, type_name } = &m.functions[2].body[2].kind else { panic!() };
        assert_eq!(ty.params, vec![ValType::I32]);
        assert_eq!(type_name.as_deref(), Some("$t"));
    }

    #[test]
    fn unsupported_opcode_is_named() {
        let e = parse_module("(module (func v128.const i32x4 0 0 0 0 drop))").unwrap_err();
        assert_eq!(e.kind, FrontendErrorKind::UnsupportedOpcode("v128.const".into()));
        assert_eq!(e.pos.line, 1);
    }

    #[test]
    fn unresolved_names() {
        let e = parse_module("(module (func call $nope))").unwrap_err();
        assert!(matches!(e.kind, FrontendErrorKind::Unresolved { what: "function", .. }));
        let e = parse_module("(module (func local.get $x drop))").unwrap_err();
        assert!(matches!(e.kind, FrontendErrorKind::Unresolved { what: "local", .. }));
        let e = parse_module("(module (func br $l))").unwrap_err();
        assert!(matches!(e.kind, FrontendErrorKind::Unresolved { what: "label", .. }));
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_module("(module\n  (func block))").unwrap_err();
        assert_eq!(e.pos.line, 2);
        assert!(matches!(e.kind, FrontendErrorKind::Syntax(_)));
    }

    #[test]
    fn invalid_stack_is_rejected() {
        let e = parse_module("(module (func i32.add drop))").unwrap_err();
        assert!(matches!(e.kind, FrontendErrorKind::Invalid(_)));
        let e = parse_module("(module (func i32.const 1))").unwrap_err();
        assert!(matches!(e.kind, FrontendErrorKind::Invalid(_)));
    }

    #[test]
    fn memory_immediates() {
        let m = parse_module(
            "(module (memory 1) (func (param i32) local.get 0 local.get 0 i32.store8 offset=4 align=1))",
        )
        .unwrap();
        let InstrKind::Store(info, arg) = &m.functions[0].body[2].kind else { panic!() };
        assert_eq!(info.name, "i32.store8");
        assert_eq!(*arg, MemArg { offset: 4, align: 0 });
    }
}
