//! In-memory representation of a parsed WAT module.
//!
//! Folded expressions are already flattened: every body is a linear sequence
//! in execution order, with `block`/`loop`/`if` kept as nested containers.

use std::fmt;

use super::opcodes::{MemOpInfo, NumOpInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValType {
    I32,
    I64,
    F32,
    F64,
}

impl ValType {
    pub fn as_str(self) -> &'static str {
        match self {
            ValType::I32 => "i32",
            ValType::I64 => "i64",
            ValType::F32 => "f32",
            ValType::F64 => "f64",
        }
    }

    pub fn parse(s: &str) -> Option<ValType> {
        match s {
            "i32" => Some(ValType::I32),
            "i64" => Some(ValType::I64),
            "f32" => Some(ValType::F32),
            "f64" => Some(ValType::F64),
            _ => None,
        }
    }
}

impl fmt::Display for ValType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A function signature. Ordering is total so it can key a sorted index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FuncType {
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
}

impl fmt::Display for FuncType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[ValType]| v.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(",");
        write!(f, "({})->({})", join(&self.params), join(&self.results))
    }
}

/// Constant immediates. Floats are kept as raw bits so that NaN payloads
/// survive round-trips and equality stays structural.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstValue {
    I32(i32),
    I64(i64),
    F32(u32),
    F64(u64),
}

impl ConstValue {
    pub fn val_type(self) -> ValType {
        match self {
            ConstValue::I32(_) => ValType::I32,
            ConstValue::I64(_) => ValType::I64,
            ConstValue::F32(_) => ValType::F32,
            ConstValue::F64(_) => ValType::F64,
        }
    }

    /// Numeric value as a double (exact for i32, f32 and f64).
    pub fn as_f64(self) -> f64 {
        match self {
            ConstValue::I32(v) => v as f64,
            ConstValue::I64(v) => v as f64,
            ConstValue::F32(b) => f32::from_bits(b) as f64,
            ConstValue::F64(b) => f64::from_bits(b),
        }
    }

    /// Integer value when the constant is an integer type.
    pub fn as_i64(self) -> Option<i64> {
        match self {
            ConstValue::I32(v) => Some(v as i64),
            ConstValue::I64(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for ConstValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn float(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
            if v.is_nan() {
                f.write_str("nan")
            } else if v.is_infinite() {
                f.write_str(if v > 0.0 { "inf" } else { "-inf" })
            } else {
                write!(f, "{v}")
            }
        }
        match *self {
            ConstValue::I32(v) => write!(f, "{v}"),
            ConstValue::I64(v) => write!(f, "{v}"),
            ConstValue::F32(b) => float(f, f32::from_bits(b) as f64),
            ConstValue::F64(b) => float(f, f64::from_bits(b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRef {
    pub index: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalRef {
    pub index: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncRef {
    pub index: u32,
    pub name: String,
}

/// A resolved branch target. `depth` counts enclosing constructs outward
/// from the branch (0 = innermost); a depth equal to the number of open
/// constructs denotes the function body itself. `arity` is the number of
/// values the branch transfers to its target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRef {
    pub name: String,
    pub depth: u32,
    pub arity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemArg {
    pub offset: u32,
    pub align: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub label: String,
    pub result: Option<ValType>,
    pub body: Vec<Instruction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfBlock {
    pub label: String,
    pub result: Option<ValType>,
    pub then_body: Vec<Instruction>,
    pub else_body: Option<Vec<Instruction>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrKind {
    Const(ConstValue),
    Numeric(&'static NumOpInfo),
    Drop,
    Select,
    LocalGet(LocalRef),
    LocalSet(LocalRef),
    LocalTee(LocalRef),
    GlobalGet(GlobalRef),
    GlobalSet(GlobalRef),
    Load(&'static MemOpInfo, MemArg),
    Store(&'static MemOpInfo, MemArg),
    MemorySize,
    MemoryGrow,
    Nop,
    Unreachable,
    Br(LabelRef),
    BrIf(LabelRef),
    BrTable { targets: Vec<LabelRef>, default: LabelRef },
    Return,
    Block(Block),
    Loop(Block),
    If(IfBlock),
    Call(FuncRef),
    CallIndirect { ty: FuncType, type_name: Option<String> },
}

/// One instruction. `order` is the pre-order position within its function
/// body: a container precedes the instructions it encloses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub kind: InstrKind,
    pub order: u32,
}

impl Instruction {
    /// Mnemonic as written in WAT (`block`, `i32.add`, `call`, ...).
    pub fn mnemonic(&self) -> &'static str {
        match &self.kind {
            InstrKind::Const(c) => match c.val_type() {
                ValType::I32 => "i32.const",
                ValType::I64 => "i64.const",
                ValType::F32 => "f32.const",
                ValType::F64 => "f64.const",
            },
            InstrKind::Numeric(op) => op.name,
            InstrKind::Drop => "drop",
            InstrKind::Select => "select",
            InstrKind::LocalGet(_) => "local.get",
            InstrKind::LocalSet(_) => "local.set",
            InstrKind::LocalTee(_) => "local.tee",
            InstrKind::GlobalGet(_) => "global.get",
            InstrKind::GlobalSet(_) => "global.set",
            InstrKind::Load(op, _) | InstrKind::Store(op, _) => op.name,
            InstrKind::MemorySize => "memory.size",
            InstrKind::MemoryGrow => "memory.grow",
            InstrKind::Nop => "nop",
            InstrKind::Unreachable => "unreachable",
            InstrKind::Br(_) => "br",
            InstrKind::BrIf(_) => "br_if",
            InstrKind::BrTable { .. } => "br_table",
            InstrKind::Return => "return",
            InstrKind::Block(_) => "block",
            InstrKind::Loop(_) => "loop",
            InstrKind::If(_) => "if",
            InstrKind::Call(_) => "call",
            InstrKind::CallIndirect { .. } => "call_indirect",
        }
    }

    /// Instructions after which the rest of the enclosing sequence is dead.
    pub fn is_unconditional_transfer(&self) -> bool {
        matches!(
            self.kind,
            InstrKind::Br(_) | InstrKind::BrTable { .. } | InstrKind::Return | InstrKind::Unreachable
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: ValType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionIR {
    pub name: String,
    pub index: u32,
    pub params: Vec<Param>,
    pub locals: Vec<Param>,
    pub results: Vec<ValType>,
    pub body: Vec<Instruction>,
    /// `(module, field)` for imported functions.
    pub import: Option<(String, String)>,
    pub exports: Vec<String>,
}

impl FunctionIR {
    pub fn is_import(&self) -> bool {
        self.import.is_some()
    }

    pub fn is_export(&self) -> bool {
        !self.exports.is_empty()
    }

    pub fn signature(&self) -> FuncType {
        FuncType {
            params: self.params.iter().map(|p| p.ty).collect(),
            results: self.results.clone(),
        }
    }

    /// Name of the local at `index` in the combined params+locals space.
    pub fn local_name(&self, index: u32) -> Option<&str> {
        let i = index as usize;
        if i < self.params.len() {
            Some(&self.params[i].name)
        } else {
            self.locals.get(i - self.params.len()).map(|l| l.name.as_str())
        }
    }

    pub fn local_count(&self) -> usize {
        self.params.len() + self.locals.len()
    }

    /// Number of instructions in the body, counting containers.
    pub fn instruction_count(&self) -> usize {
        fn count(seq: &[Instruction]) -> usize {
            seq.iter()
                .map(|i| {
                    1 + match &i.kind {
                        InstrKind::Block(b) | InstrKind::Loop(b) => count(&b.body),
                        InstrKind::If(b) => {
                            count(&b.then_body) + b.else_body.as_deref().map_or(0, count)
                        }
                        _ => 0,
                    }
                })
                .sum()
        }
        count(&self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalIR {
    pub name: String,
    pub ty: ValType,
    pub mutable: bool,
    pub import: Option<(String, String)>,
    pub init: Option<ConstValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModuleIR {
    pub name: Option<String>,
    pub functions: Vec<FunctionIR>,
    /// Declared `(type ...)` entries, in declaration order.
    pub signatures: Vec<(Option<String>, FuncType)>,
    pub globals: Vec<GlobalIR>,
    /// Function indices stored in the function table, by slot order.
    pub table: Vec<u32>,
    pub start: Option<u32>,
}

impl ModuleIR {
    pub fn function(&self, index: u32) -> Option<&FunctionIR> {
        self.functions.get(index as usize)
    }

    pub fn function_by_name(&self, name: &str) -> Option<&FunctionIR> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn instruction_count(&self) -> usize {
        self.functions.iter().map(FunctionIR::instruction_count).sum()
    }
}
