//! Random well-typed WAT functions. Every statement is stack neutral and
//! every expression pushes one i32, so any mix of them validates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const PARAMS: u32 = 2;
pub const LOCALS: u32 = 3;
pub const GLOBALS: u32 = 2;

const BINOPS: &[&str] = &["i32.add", "i32.sub", "i32.mul", "i32.and", "i32.or", "i32.xor", "i32.shl"];
const RELOPS: &[&str] = &["i32.eq", "i32.ne", "i32.lt_s", "i32.gt_u", "i32.le_s"];

struct Label {
    name: String,
    carries_value: bool,
}

pub struct Shape {
    /// Instruction budget, `end`/`else` included.
    pub max_instructions: usize,
    pub max_loop_depth: u32,
    /// Chance that a statement opens a loop when allowed.
    pub loop_weight: u32,
    /// Whether void blocks may end in `br`, `br_table`, `return` or
    /// `unreachable`, leaving later code dead.
    pub terminators: bool,
}

pub struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    out: Vec<String>,
    shape: Shape,
    labels: Vec<Label>,
    loop_depth: u32,
    next_label: u32,
}

impl<'a> Gen<'a> {
    pub fn new(rng: &'a mut ChaCha8Rng, shape: Shape) -> Self {
        Gen { rng, out: Vec::new(), shape, labels: Vec::new(), loop_depth: 0, next_label: 0 }
    }

    fn emit(&mut self, s: impl Into<String>) {
        self.out.push(s.into());
    }

    fn left(&self) -> usize {
        self.shape.max_instructions.saturating_sub(self.out.len())
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next_label += 1;
        format!("${prefix}{}", self.next_label)
    }

    fn var(&mut self) -> String {
        let i = self.rng.gen_range(0..PARAMS + LOCALS);
        if i < PARAMS {
            format!("$p{i}")
        } else {
            format!("$l{}", i - PARAMS)
        }
    }

    fn writable_local(&mut self) -> String {
        format!("$l{}", self.rng.gen_range(0..LOCALS))
    }

    fn global(&mut self) -> String {
        format!("$g{}", self.rng.gen_range(0..GLOBALS))
    }

    fn leaf(&mut self) {
        match self.rng.gen_range(0..3) {
            0 => {
                let v = self.rng.gen_range(-4..64);
                self.emit(format!("i32.const {v}"));
            }
            1 => {
                let v = self.var();
                self.emit(format!("local.get {v}"));
            }
            _ => {
                let v = self.global();
                self.emit(format!("global.get {v}"));
            }
        }
    }

    /// Pushes one i32; falls back to a leaf when the budget runs low.
    pub fn expr(&mut self, depth: u32) {
        if depth >= 4 || self.left() < 8 {
            return self.leaf();
        }
        match self.rng.gen_range(0..12) {
            0..=2 => self.leaf(),
            10 => {
                self.expr(depth + 1);
                let off = 4 * self.rng.gen_range(0..4);
                self.emit(format!("i32.load offset={off}"));
            }
            11 => {
                self.expr(depth + 1);
                self.expr(depth + 1);
                self.emit("call_indirect (type $t)");
            }
            3 => {
                self.expr(depth + 1);
                self.expr(depth + 1);
                let op = BINOPS[self.rng.gen_range(0..BINOPS.len())];
                self.emit(op);
            }
            4 => {
                self.expr(depth + 1);
                self.expr(depth + 1);
                let op = RELOPS[self.rng.gen_range(0..RELOPS.len())];
                self.emit(op);
            }
            5 => {
                self.expr(depth + 1);
                let v = self.writable_local();
                self.emit(format!("local.tee {v}"));
            }
            6 => {
                self.expr(depth + 1);
                self.emit("call $ext");
            }
            7 => {
                self.expr(depth + 1);
                self.expr(depth + 1);
                self.expr(depth + 1);
                self.emit("select");
            }
            8 => {
                // Value-carrying early exit.
                let name = self.fresh("v");
                self.emit(format!("block {name} (result i32)"));
                self.labels.push(Label { name: name.clone(), carries_value: true });
                self.expr(depth + 1);
                self.expr(depth + 1);
                self.emit(format!("br_if {name}"));
                self.emit("drop");
                self.expr(depth + 1);
                self.labels.pop();
                self.emit("end");
            }
            9 => {
                self.expr(depth + 1);
                self.emit("if (result i32)");
                self.labels.push(Label { name: String::new(), carries_value: true });
                self.expr(depth + 1);
                self.emit("else");
                self.expr(depth + 1);
                self.labels.pop();
                self.emit("end");
            }
            _ => unreachable!(),
        }
    }

    fn void_label(&mut self) -> Option<String> {
        let names: Vec<String> =
            self.labels.iter().filter(|l| !l.carries_value && !l.name.is_empty()).map(|l| l.name.clone()).collect();
        if names.is_empty() {
            None
        } else {
            Some(names[self.rng.gen_range(0..names.len())].clone())
        }
    }

    fn body(&mut self, depth: u32) {
        let n = self.rng.gen_range(1..4);
        for _ in 0..n {
            if self.left() < 10 {
                break;
            }
            self.stmt(depth + 1);
        }
    }

    pub fn stmt(&mut self, depth: u32) {
        if self.left() < 6 {
            return;
        }
        let loops_ok = self.loop_depth < self.shape.max_loop_depth && depth < 6 && self.left() > 14;
        let roll = self.rng.gen_range(0..100);
        if loops_ok && roll < self.shape.loop_weight {
            let name = self.fresh("L");
            self.emit(format!("loop {name}"));
            self.labels.push(Label { name: name.clone(), carries_value: false });
            self.loop_depth += 1;
            self.body(depth);
            self.expr(depth + 1);
            self.emit(format!("br_if {name}"));
            self.loop_depth -= 1;
            self.labels.pop();
            self.emit("end");
            return;
        }
        match roll % 8 {
            0 | 1 => {
                self.expr(depth);
                let v = self.writable_local();
                self.emit(format!("local.set {v}"));
            }
            2 => {
                self.expr(depth);
                let v = self.global();
                self.emit(format!("global.set {v}"));
            }
            3 => {
                self.expr(depth);
                self.emit("call $sink");
            }
            4 if depth < 6 => {
                let name = self.fresh("B");
                self.emit(format!("block {name}"));
                self.labels.push(Label { name: name.clone(), carries_value: false });
                self.body(depth);
                self.terminator(depth);
                self.labels.pop();
                self.emit("end");
            }
            5 if depth < 6 => {
                self.expr(depth);
                self.emit("if");
                self.labels.push(Label { name: String::new(), carries_value: false });
                self.body(depth);
                if self.rng.gen_bool(0.5) {
                    self.emit("else");
                    self.body(depth);
                }
                self.labels.pop();
                self.emit("end");
            }
            6 => match self.void_label() {
                Some(l) => {
                    self.expr(depth);
                    self.emit(format!("br_if {l}"));
                }
                None => {
                    self.expr(depth);
                    self.emit("drop");
                }
            },
            7 if self.rng.gen_bool(0.5) => {
                self.expr(depth);
                self.expr(depth);
                let off = 4 * self.rng.gen_range(0..4);
                self.emit(format!("i32.store offset={off}"));
            }
            _ => {
                self.expr(depth);
                self.emit("drop");
            }
        }
    }

    /// Optional unconditional transfer closing a void block body.
    fn terminator(&mut self, depth: u32) {
        if !self.shape.terminators {
            return;
        }
        match self.rng.gen_range(0..10) {
            0..=2 => {
                let l = self.void_label().expect("inside a named block");
                self.emit(format!("br {l}"));
            }
            3 => {
                let n = self.rng.gen_range(1..4);
                let targets: Vec<String> = (0..n).map(|_| self.void_label().expect("inside a named block")).collect();
                self.expr(depth);
                self.emit(format!("br_table {}", targets.join(" ")));
            }
            4 => {
                self.expr(depth);
                self.emit("return");
            }
            5 => self.emit("unreachable"),
            _ => {}
        }
    }

    /// Statements until the budget runs low, then the result expression.
    pub fn function_body(mut self) -> Vec<String> {
        while self.left() > 12 {
            self.stmt(0);
        }
        self.expr(3);
        self.out
    }
}

fn header() -> String {
    let mut s = String::from(
        "(module\n  (type $t (func (param i32) (result i32)))\n  (import \"env\" \"ext\" (func $ext (param i32) (result i32)))\n  (import \"env\" \"sink\" (func $sink (param i32)))\n  (memory 1)\n  (table 1 funcref)\n  (elem (i32.const 0) $ext)\n",
    );
    for g in 0..GLOBALS {
        s.push_str(&format!("  (global $g{g} (mut i32) (i32.const {g}))\n"));
    }
    s
}

fn function(name: &str, body: &[String]) -> String {
    let params: String = (0..PARAMS).map(|i| format!(" (param $p{i} i32)")).collect();
    let locals: String = (0..LOCALS).map(|i| format!(" (local $l{i} i32)")).collect();
    let mut s = format!("  (func {name} (export \"{}\"){params} (result i32){locals}\n", &name[1..]);
    for line in body {
        s.push_str("    ");
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("  )\n");
    s
}

/// One module with a single random function of at most `max_instructions`
/// instructions and at most `max_loop_depth` nested loops.
pub fn random_function_module(rng: &mut ChaCha8Rng, max_instructions: usize, max_loop_depth: u32) -> String {
    // Nested expressions can overshoot the budget a little; draw again.
    loop {
        let body = Gen::new(rng, Shape { max_instructions, max_loop_depth, loop_weight: 40, terminators: true }).function_body();
        if body.len() <= max_instructions {
            return format!("{}{})\n", header(), function("$f", &body));
        }
    }
}

/// Loop-heavy module of roughly `n` instructions split into functions of
/// about `per_function` instructions each.
pub fn loop_heavy_module(rng: &mut ChaCha8Rng, n: usize, per_function: usize) -> String {
    let mut s = header();
    let mut emitted = 0;
    let mut i = 0;
    while emitted < n {
        let want = per_function.min(n - emitted).max(16);
        let body = Gen::new(rng, Shape { max_instructions: want, max_loop_depth: 3, loop_weight: 45, terminators: false }).function_body();
        emitted += body.len();
        s.push_str(&function(&format!("$f{i}"), &body));
        i += 1;
    }
    s.push_str(")\n");
    s
}

/// Instructions in a generated body, as counted by the generator.
pub fn count_instructions(wat: &str) -> usize {
    wat.lines().filter(|l| l.starts_with("    ")).count()
}
