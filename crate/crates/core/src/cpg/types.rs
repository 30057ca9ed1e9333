//! Enumerations naming node kinds, instruction types, edge types and
//! property keys, with their canonical spellings.

use std::fmt;
use std::str::FromStr;

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = UnknownName;
            fn from_str(s: &str) -> Result<Self, UnknownName> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownName { what: stringify!($name), name: s.to_string() }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {what} `{name}`")]
pub struct UnknownName {
    pub what: &'static str,
    pub name: String,
}

named_enum!(NodeKind {
    Module => "Module",
    Function => "Function",
    FunctionSignature => "FunctionSignature",
    Parameters => "Parameters",
    Locals => "Locals",
    Results => "Results",
    Else => "Else",
    Trap => "Trap",
    Start => "Start",
    VarNode => "VarNode",
    Instruction => "Instruction",
});

named_enum!(InstType {
    Nop => "Nop",
    Unreachable => "Unreachable",
    Return => "Return",
    BrTable => "BrTable",
    Drop => "Drop",
    Select => "Select",
    MemorySize => "MemorySize",
    MemoryGrow => "MemoryGrow",
    CallIndirect => "CallIndirect",
    Block => "Block",
    Loop => "Loop",
    If => "If",
    Br => "Br",
    BrIf => "BrIf",
    GlobalGet => "GlobalGet",
    GlobalSet => "GlobalSet",
    LocalGet => "LocalGet",
    LocalSet => "LocalSet",
    LocalTee => "LocalTee",
    Call => "Call",
    BeginBlock => "BeginBlock",
    Const => "Const",
    Binary => "Binary",
    Compare => "Compare",
    Unary => "Unary",
    Convert => "Convert",
    Load => "Load",
    Store => "Store",
});

named_enum!(EdgeType {
    Ast => "AST",
    Cfg => "CFG",
    Cg => "CG",
    Ddg => "DDG",
});

named_enum!(DdgType {
    Global => "Global",
    Local => "Local",
    Const => "Const",
    Control => "Control",
    Function => "Function",
});

named_enum!(
    /// Property keys. Declaration order is the canonical serialization order.
    PropKey {
        InstType => "instType",
        Name => "name",
        Index => "index",
        Label => "label",
        NArgs => "nargs",
        NLocals => "nlocals",
        NResults => "nresults",
        IsImport => "isImport",
        IsExport => "isExport",
        HasElse => "hasElse",
        Opcode => "opcode",
        Offset => "offset",
        DdgType => "ddgType",
        ValueType => "valueType",
        Value => "value",
        ChildIndex => "childIndex",
    }
);

impl EdgeType {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in NodeKind::ALL {
            assert_eq!(k.as_str().parse::<NodeKind>().unwrap(), *k);
        }
        for k in InstType::ALL {
            assert_eq!(k.as_str().parse::<InstType>().unwrap(), *k);
        }
        for k in PropKey::ALL {
            assert_eq!(k.as_str().parse::<PropKey>().unwrap(), *k);
        }
        assert_eq!("DDG".parse::<EdgeType>().unwrap(), EdgeType::Ddg);
        assert!("Bogus".parse::<DdgType>().is_err());
    }
}
