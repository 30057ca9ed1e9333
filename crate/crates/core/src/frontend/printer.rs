//! Pretty-printer emitting flat-form WAT that reparses to an equal module.

use std::fmt::Write;

use super::ir::*;

fn ty_list(kw: &str, types: &[ValType]) -> String {
    if types.is_empty() {
        return String::new();
    }
    let parts: Vec<&str> = types.iter().map(|t| t.as_str()).collect();
    format!(" ({kw} {})", parts.join(" "))
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for b in s.bytes() {
        match b {
            b'"' => out.push_str("\\\""),
            b'\\' => out.push_str("\\\\"),
            0x20..=0x7e => out.push(b as char),
            _ => {
                let _ = write!(out, "\\{b:02x}");
            }
        }
    }
    out.push('"');
    out
}

fn const_literal(c: ConstValue) -> String {
    match c {
        ConstValue::F32(b) if f32::from_bits(b).is_nan() => "nan".into(),
        ConstValue::F64(b) if f64::from_bits(b).is_nan() => "nan".into(),
        _ => c.to_string(),
    }
}

fn signature(params: &[Param], results: &[ValType]) -> String {
    let mut s = String::new();
    for p in params {
        let _ = write!(s, " (param {} {})", p.name, p.ty);
    }
    s.push_str(&ty_list("result", results));
    s
}

/// Renders `module` as WAT text.
pub fn print_module(module: &ModuleIR) -> String {
    let mut out = String::from("(module");
    if let Some(n) = &module.name {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    for (name, ty) in &module.signatures {
        let name = name.as_deref().map(|n| format!(" {n}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "  (type{name} (func{}{}))",
            ty_list("param", &ty.params),
            ty_list("result", &ty.results)
        );
    }
    for f in module.functions.iter().filter(|f| f.is_import()) {
        let (m, field) = f.import.as_ref().expect("import");
        let _ = writeln!(
            out,
            "  (import {} {} (func {}{}))",
            quote(m),
            quote(field),
            f.name,
            signature(&f.params, &f.results)
        );
    }
    for g in &module.globals {
        let ty = if g.mutable { format!("(mut {})", g.ty) } else { g.ty.to_string() };
        match &g.import {
            Some((m, field)) => {
                let _ = writeln!(out, "  (import {} {} (global {} {ty}))", quote(m), quote(field), g.name);
            }
            None => {
                let init = g
                    .init
                    .map(|c| format!(" ({}.const {})", c.val_type(), const_literal(c)))
                    .unwrap_or_default();
                let _ = writeln!(out, "  (global {} {ty}{init})", g.name);
            }
        }
    }
    if !module.table.is_empty() {
        let _ = writeln!(out, "  (table {} funcref)", module.table.len());
        let names: Vec<&str> = module
            .table
            .iter()
            .map(|&i| module.functions[i as usize].name.as_str())
            .collect();
        let _ = writeln!(out, "  (elem (i32.const 0) {})", names.join(" "));
    }
    for f in module.functions.iter().filter(|f| !f.is_import()) {
        let _ = write!(out, "  (func {}", f.name);
        for e in &f.exports {
            let _ = write!(out, " (export {})", quote(e));
        }
        out.push_str(&signature(&f.params, &f.results));
        for l in &f.locals {
            let _ = write!(out, " (local {} {})", l.name, l.ty);
        }
        out.push('\n');
        print_seq(&mut out, &f.body, 2);
        out.push_str("  )\n");
    }
    for f in module.functions.iter().filter(|f| f.is_import() && f.is_export()) {
        for e in &f.exports {
            let _ = writeln!(out, "  (export {} (func {}))", quote(e), f.name);
        }
    }
    if let Some(s) = module.start {
        let _ = writeln!(out, "  (start {})", module.functions[s as usize].name);
    }
    out.push_str(")\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_seq(out: &mut String, seq: &[Instruction], depth: usize) {
    for inst in seq {
        indent(out, depth);
        match &inst.kind {
            InstrKind::Block(b) | InstrKind::Loop(b) => {
                let _ = writeln!(out, "{} {}{}", inst.mnemonic(), b.label, ty_list("result", b.result.as_slice()));
                print_seq(out, &b.body, depth + 1);
                indent(out, depth);
                out.push_str("end\n");
            }
            InstrKind::If(b) => {
                let _ = writeln!(out, "if {}{}", b.label, ty_list("result", b.result.as_slice()));
                print_seq(out, &b.then_body, depth + 1);
                if let Some(e) = &b.else_body {
                    indent(out, depth);
                    out.push_str("else\n");
                    print_seq(out, e, depth + 1);
                }
                indent(out, depth);
                out.push_str("end\n");
            }
            other => {
                out.push_str(inst.mnemonic());
                match other {
                    InstrKind::Const(c) => {
                        let _ = write!(out, " {}", const_literal(*c));
                    }
                    InstrKind::LocalGet(l) | InstrKind::LocalSet(l) | InstrKind::LocalTee(l) => {
                        let _ = write!(out, " {}", l.name);
                    }
                    InstrKind::GlobalGet(g) | InstrKind::GlobalSet(g) => {
                        let _ = write!(out, " {}", g.name);
                    }
                    InstrKind::Br(l) | InstrKind::BrIf(l) => {
                        let _ = write!(out, " {}", l.depth);
                    }
                    InstrKind::BrTable { targets, default } => {
                        for t in targets.iter().chain(std::iter::once(default)) {
                            let _ = write!(out, " {}", t.depth);
                        }
                    }
                    InstrKind::Call(f) => {
                        let _ = write!(out, " {}", f.name);
                    }
                    InstrKind::CallIndirect { ty, type_name } => match type_name {
                        Some(n) => {
                            let _ = write!(out, " (type {n})");
                        }
                        None => {
                            out.push_str(&ty_list("param", &ty.params));
                            out.push_str(&ty_list("result", &ty.results));
                        }
                    },
                    InstrKind::Load(info, arg) | InstrKind::Store(info, arg) => {
                        if arg.offset != 0 {
                            let _ = write!(out, " offset={}", arg.offset);
                        }
                        if arg.align != info.natural_align() {
                            let _ = write!(out, " align={}", 1u32 << arg.align);
                        }
                    }
                    _ => {}
                }
                out.push('\n');
            }
        }
    }
}
