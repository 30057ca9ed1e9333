//! Tables of the supported numeric and memory opcodes.

use super::ir::ValType;
use ValType::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumClass {
    /// `t.unop`: one operand, same type result.
    Unary,
    /// `t.binop`: two operands.
    Binary,
    /// `t.relop`: two operands, i32 result.
    Compare,
    /// `t.eqz`: one operand, i32 result. Classified as a comparison node.
    Test,
    /// `t.cvtop`: one operand of another type.
    Convert,
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct NumOpInfo {
    pub name: &'static str,
    pub class: NumClass,
    pub operand: ValType,
    pub result: ValType,
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct MemOpInfo {
    pub name: &'static str,
    pub ty: ValType,
    /// Access width in bytes.
    pub width: u32,
    pub is_store: bool,
}

impl MemOpInfo {
    /// log2 of the natural alignment, the default `align=` value.
    pub fn natural_align(&self) -> u32 {
        self.width.trailing_zeros()
    }
}

macro_rules! num {
    ($name:literal, $class:ident, $op:ident, $res:ident) => {
        NumOpInfo { name: $name, class: NumClass::$class, operand: $op, result: $res }
    };
}

pub static NUMERIC_OPS: &[NumOpInfo] = &[
    // i32
    num!("i32.clz", Unary, I32, I32),
    num!("i32.ctz", Unary, I32, I32),
    num!("i32.popcnt", Unary, I32, I32),
    num!("i32.add", Binary, I32, I32),
    num!("i32.sub", Binary, I32, I32),
    num!("i32.mul", Binary, I32, I32),
    num!("i32.div_s", Binary, I32, I32),
    num!("i32.div_u", Binary, I32, I32),
    num!("i32.rem_s", Binary, I32, I32),
    num!("i32.rem_u", Binary, I32, I32),
    num!("i32.and", Binary, I32, I32),
    num!("i32.or", Binary, I32, I32),
    num!("i32.xor", Binary, I32, I32),
    num!("i32.shl", Binary, I32, I32),
    num!("i32.shr_s", Binary, I32, I32),
    num!("i32.shr_u", Binary, I32, I32),
    num!("i32.rotl", Binary, I32, I32),
    num!("i32.rotr", Binary, I32, I32),
    num!("i32.eqz", Test, I32, I32),
    num!("i32.eq", Compare, I32, I32),
    num!("i32.ne", Compare, I32, I32),
    num!("i32.lt_s", Compare, I32, I32),
    num!("i32.lt_u", Compare, I32, I32),
    num!("i32.gt_s", Compare, I32, I32),
    num!("i32.gt_u", Compare, I32, I32),
    num!("i32.le_s", Compare, I32, I32),
    num!("i32.le_u", Compare, I32, I32),
    num!("i32.ge_s", Compare, I32, I32),
    num!("i32.ge_u", Compare, I32, I32),
    // i64
    num!("i64.clz", Unary, I64, I64),
    num!("i64.ctz", Unary, I64, I64),
    num!("i64.popcnt", Unary, I64, I64),
    num!("i64.add", Binary, I64, I64),
    num!("i64.sub", Binary, I64, I64),
    num!("i64.mul", Binary, I64, I64),
    num!("i64.div_s", Binary, I64, I64),
    num!("i64.div_u", Binary, I64, I64),
    num!("i64.rem_s", Binary, I64, I64),
    num!("i64.rem_u", Binary, I64, I64),
    num!("i64.and", Binary, I64, I64),
    num!("i64.or", Binary, I64, I64),
    num!("i64.xor", Binary, I64, I64),
    num!("i64.shl", Binary, I64, I64),
    num!("i64.shr_s", Binary, I64, I64),
    num!("i64.shr_u", Binary, I64, I64),
    num!("i64.rotl", Binary, I64, I64),
    num!("i64.rotr", Binary, I64, I64),
    num!("i64.eqz", Test, I64, I32),
    num!("i64.eq", Compare, I64, I32),
    num!("i64.ne", Compare, I64, I32),
    num!("i64.lt_s", Compare, I64, I32),
    num!("i64.lt_u", Compare, I64, I32),
    num!("i64.gt_s", Compare, I64, I32),
    num!("i64.gt_u", Compare, I64, I32),
    num!("i64.le_s", Compare, I64, I32),
    num!("i64.le_u", Compare, I64, I32),
    num!("i64.ge_s", Compare, I64, I32),
    num!("i64.ge_u", Compare, I64, I32),
    // f32
    num!("f32.abs", Unary, F32, F32),
    num!("f32.neg", Unary, F32, F32),
    num!("f32.ceil", Unary, F32, F32),
    num!("f32.floor", Unary, F32, F32),
    num!("f32.trunc", Unary, F32, F32),
    num!("f32.nearest", Unary, F32, F32),
    num!("f32.sqrt", Unary, F32, F32),
    num!("f32.add", Binary, F32, F32),
    num!("f32.sub", Binary, F32, F32),
    num!("f32.mul", Binary, F32, F32),
    num!("f32.div", Binary, F32, F32),
    num!("f32.min", Binary, F32, F32),
    num!("f32.max", Binary, F32, F32),
    num!("f32.copysign", Binary, F32, F32),
    num!("f32.eq", Compare, F32, I32),
    num!("f32.ne", Compare, F32, I32),
    num!("f32.lt", Compare, F32, I32),
    num!("f32.gt", Compare, F32, I32),
    num!("f32.le", Compare, F32, I32),
    num!("f32.ge", Compare, F32, I32),
    // f64
    num!("f64.abs", Unary, F64, F64),
    num!("f64.neg", Unary, F64, F64),
    num!("f64.ceil", Unary, F64, F64),
    num!("f64.floor", Unary, F64, F64),
    num!("f64.trunc", Unary, F64, F64),
    num!("f64.nearest", Unary, F64, F64),
    num!("f64.sqrt", Unary, F64, F64),
    num!("f64.add", Binary, F64, F64),
    num!("f64.sub", Binary, F64, F64),
    num!("f64.mul", Binary, F64, F64),
    num!("f64.div", Binary, F64, F64),
    num!("f64.min", Binary, F64, F64),
    num!("f64.max", Binary, F64, F64),
    num!("f64.copysign", Binary, F64, F64),
    num!("f64.eq", Compare, F64, I32),
    num!("f64.ne", Compare, F64, I32),
    num!("f64.lt", Compare, F64, I32),
    num!("f64.gt", Compare, F64, I32),
    num!("f64.le", Compare, F64, I32),
    num!("f64.ge", Compare, F64, I32),
    // conversions
    num!("i32.wrap_i64", Convert, I64, I32),
    num!("i32.trunc_f32_s", Convert, F32, I32),
    num!("i32.trunc_f32_u", Convert, F32, I32),
    num!("i32.trunc_f64_s", Convert, F64, I32),
    num!("i32.trunc_f64_u", Convert, F64, I32),
    num!("i64.extend_i32_s", Convert, I32, I64),
    num!("i64.extend_i32_u", Convert, I32, I64),
    num!("i64.trunc_f32_s", Convert, F32, I64),
    num!("i64.trunc_f32_u", Convert, F32, I64),
    num!("i64.trunc_f64_s", Convert, F64, I64),
    num!("i64.trunc_f64_u", Convert, F64, I64),
    num!("f32.convert_i32_s", Convert, I32, F32),
    num!("f32.convert_i32_u", Convert, I32, F32),
    num!("f32.convert_i64_s", Convert, I64, F32),
    num!("f32.convert_i64_u", Convert, I64, F32),
    num!("f32.demote_f64", Convert, F64, F32),
    num!("f64.convert_i32_s", Convert, I32, F64),
    num!("f64.convert_i32_u", Convert, I32, F64),
    num!("f64.convert_i64_s", Convert, I64, F64),
    num!("f64.convert_i64_u", Convert, I64, F64),
    num!("f64.promote_f32", Convert, F32, F64),
    num!("i32.reinterpret_f32", Convert, F32, I32),
    num!("i64.reinterpret_f64", Convert, F64, I64),
    num!("f32.reinterpret_i32", Convert, I32, F32),
    num!("f64.reinterpret_i64", Convert, I64, F64),
];

macro_rules! mem {
    ($name:literal, $ty:ident, $width:literal, $store:literal) => {
        MemOpInfo { name: $name, ty: $ty, width: $width, is_store: $store }
    };
}

pub static MEMORY_OPS: &[MemOpInfo] = &[
    mem!("i32.load", I32, 4, false),
    mem!("i64.load", I64, 8, false),
    mem!("f32.load", F32, 4, false),
    mem!("f64.load", F64, 8, false),
    mem!("i32.load8_s", I32, 1, false),
    mem!("i32.load8_u", I32, 1, false),
    mem!("i32.load16_s", I32, 2, false),
    mem!("i32.load16_u", I32, 2, false),
    mem!("i64.load8_s", I64, 1, false),
    mem!("i64.load8_u", I64, 1, false),
    mem!("i64.load16_s", I64, 2, false),
    mem!("i64.load16_u", I64, 2, false),
    mem!("i64.load32_s", I64, 4, false),
    mem!("i64.load32_u", I64, 4, false),
    mem!("i32.store", I32, 4, true),
    mem!("i64.store", I64, 8, true),
    mem!("f32.store", F32, 4, true),
    mem!("f64.store", F64, 8, true),
    mem!("i32.store8", I32, 1, true),
    mem!("i32.store16", I32, 2, true),
    mem!("i64.store8", I64, 1, true),
    mem!("i64.store16", I64, 2, true),
    mem!("i64.store32", I64, 4, true),
];

pub fn numeric_op(name: &str) -> Option<&'static NumOpInfo> {
    NUMERIC_OPS.iter().find(|op| op.name == name)
}

pub fn memory_op(name: &str) -> Option<&'static MemOpInfo> {
    MEMORY_OPS.iter().find(|op| op.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_are_unique() {
        let mut seen = HashSet::new();
        for n in NUMERIC_OPS.iter().map(|o| o.name).chain(MEMORY_OPS.iter().map(|o| o.name)) {
            assert!(seen.insert(n), "duplicate opcode {n}");
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(numeric_op("i32.add").unwrap().class, NumClass::Binary);
        assert_eq!(memory_op("i32.store8").unwrap().width, 1);
        assert!(numeric_op("i32.extend8_s").is_none());
        assert_eq!(memory_op("i64.load").unwrap().natural_align(), 3);
    }
}
