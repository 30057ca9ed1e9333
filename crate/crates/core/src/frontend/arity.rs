//! Stack arity of instructions and body validation by stack-height
//! simulation.

use super::ir::{FunctionIR, InstrKind, Instruction, ModuleIR};
use super::opcodes::NumClass;

/// `(nargs, nresults)`: values consumed from and produced onto the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arity {
    pub nargs: u32,
    pub nresults: u32,
}

impl Arity {
    const fn new(nargs: u32, nresults: u32) -> Self {
        Arity { nargs, nresults }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArityError {
    #[error("unknown callee signature for function index {0}")]
    UnknownCallee(u32),
}

/// Stack effect of `inst` inside `func`. Containers report the effect of
/// the construct as a whole: `block`/`loop` take nothing, `if` takes its
/// condition, and all produce their block result.
pub fn instruction_arity(inst: &Instruction, module: &ModuleIR, func: &FunctionIR) -> Result<Arity, ArityError> {
    Ok(match &inst.kind {
        InstrKind::Const(_) => Arity::new(0, 1),
        InstrKind::Numeric(op) => match op.class {
            NumClass::Binary | NumClass::Compare => Arity::new(2, 1),
            NumClass::Unary | NumClass::Test | NumClass::Convert => Arity::new(1, 1),
        },
        InstrKind::Drop => Arity::new(1, 0),
        InstrKind::Select => Arity::new(3, 1),
        InstrKind::LocalGet(_) | InstrKind::GlobalGet(_) => Arity::new(0, 1),
        InstrKind::LocalSet(_) | InstrKind::GlobalSet(_) => Arity::new(1, 0),
        InstrKind::LocalTee(_) => Arity::new(1, 1),
        InstrKind::Load(..) => Arity::new(1, 1),
        InstrKind::Store(..) => Arity::new(2, 0),
        InstrKind::MemorySize => Arity::new(0, 1),
        InstrKind::MemoryGrow => Arity::new(1, 1),
        InstrKind::Nop | InstrKind::Unreachable => Arity::new(0, 0),
        InstrKind::Br(l) => Arity::new(l.arity, 0),
        InstrKind::BrIf(l) => Arity::new(l.arity + 1, l.arity),
        InstrKind::BrTable { default, .. } => Arity::new(default.arity + 1, 0),
        InstrKind::Return => Arity::new(func.results.len() as u32, 0),
        InstrKind::Block(b) | InstrKind::Loop(b) => Arity::new(0, b.result.is_some() as u32),
        InstrKind::If(b) => Arity::new(1, b.result.is_some() as u32),
        InstrKind::Call(f) => {
            let callee = module.function(f.index).ok_or(ArityError::UnknownCallee(f.index))?;
            Arity::new(callee.params.len() as u32, callee.results.len() as u32)
        }
        InstrKind::CallIndirect { ty, .. } => Arity::new(ty.params.len() as u32 + 1, ty.results.len() as u32),
    })
}

/// Checks that no instruction underflows the stack and that every sequence
/// ends with exactly its expected result count. After an unconditional
/// transfer the stack is polymorphic until the end of the sequence.
pub fn validate_function(module: &ModuleIR, func: &FunctionIR) -> Result<(), String> {
    if func.is_import() {
        return Ok(());
    }
    validate_seq(module, func, &func.body, func.results.len() as u32)
}

fn validate_seq(module: &ModuleIR, func: &FunctionIR, seq: &[Instruction], expected: u32) -> Result<(), String> {
    let mut height: u32 = 0;
    let mut polymorphic = false;
    for inst in seq {
        match &inst.kind {
            InstrKind::Block(b) | InstrKind::Loop(b) => {
                validate_seq(module, func, &b.body, b.result.is_some() as u32)?;
            }
            InstrKind::If(b) => {
                let r = b.result.is_some() as u32;
                validate_seq(module, func, &b.then_body, r)?;
                match &b.else_body {
                    Some(e) => validate_seq(module, func, e, r)?,
                    None if r > 0 => {
                        return Err(format!("if {} with a result requires an else branch", b.label));
                    }
                    None => {}
                }
            }
            _ => {}
        }
        let a = instruction_arity(inst, module, func).map_err(|e| e.to_string())?;
        if height < a.nargs {
            if !polymorphic {
                return Err(format!(
                    "stack underflow at `{}` (instruction {}): needs {}, has {}",
                    inst.mnemonic(),
                    inst.order,
                    a.nargs,
                    height
                ));
            }
            height = 0;
        } else {
            height -= a.nargs;
        }
        height += a.nresults;
        if inst.is_unconditional_transfer() {
            polymorphic = true;
            height = 0;
        }
    }
    if height != expected && !(polymorphic && height <= expected) {
        return Err(format!("sequence ends with {height} values, expected {expected}"));
    }
    Ok(())
}

/// Maximum static stack height reached anywhere in the body.
pub fn max_stack_height(module: &ModuleIR, func: &FunctionIR) -> u32 {
    fn walk(module: &ModuleIR, func: &FunctionIR, seq: &[Instruction], base: u32, max: &mut u32) {
        let mut height = base;
        for inst in seq {
            let a = instruction_arity(inst, module, func).unwrap_or(Arity::new(0, 0));
            match &inst.kind {
                InstrKind::Block(b) | InstrKind::Loop(b) => walk(module, func, &b.body, height, max),
                InstrKind::If(b) => {
                    let inner = height.saturating_sub(1);
                    walk(module, func, &b.then_body, inner, max);
                    if let Some(e) = &b.else_body {
                        walk(module, func, e, inner, max);
                    }
                }
                _ => {}
            }
            height = height.saturating_sub(a.nargs) + a.nresults;
            *max = (*max).max(height);
            if inst.is_unconditional_transfer() {
                height = base;
            }
        }
    }
    let mut max = 0;
    walk(module, func, &func.body, 0, &mut max);
    max
}
