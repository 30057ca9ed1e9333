//! Recursive-descent parser.
//!
//! Blocks need no indentation: a header (`foreach`, `while`, `if`) followed
//! by `{ ... }` owns exactly the braced statements; without braces it owns
//! every remaining statement of the enclosing block. An `else` therefore
//! requires a braced then-branch.
//!
//! Precedence, loosest first: `:=` (right associative), `||`, `&&`,
//! comparisons and `in` (non-associative), `+ -`, `* / %`, prefix `! -`,
//! postfix `.attr`, `.method(..)`, `[index]`.

use super::ast::{BinOp, Expr, ExprKind, Literal, Program, Stmt, StmtKind, UnOp};
use super::error::{Pos, WqlError};
use super::lexer::{tokenize, Tok, Token};

pub fn parse(src: &str) -> Result<Program, WqlError> {
    let mut p = Parser { toks: tokenize(src)?, at: 0 };
    let body = p.stmts_until_close()?;
    p.expect(&Tok::Eof)?;
    Ok(Program { body })
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), WqlError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn unexpected(&self, wanted: &str) -> WqlError {
        WqlError::syntax(self.pos(), format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn ident(&mut self) -> Result<String, WqlError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// Statements up to a closing `}` or end of input, which is not consumed.
    fn stmts_until_close(&mut self) -> Result<Vec<Stmt>, WqlError> {
        let mut out = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn body(&mut self) -> Result<(Vec<Stmt>, bool), WqlError> {
        self.eat(&Tok::Colon);
        if self.eat(&Tok::LBrace) {
            let b = self.stmts_until_close()?;
            self.expect(&Tok::RBrace)?;
            Ok((b, true))
        } else {
            Ok((self.stmts_until_close()?, false))
        }
    }

    fn stmt(&mut self) -> Result<Stmt, WqlError> {
        let pos = self.pos();
        let kind = match self.peek() {
            Tok::Foreach => {
                self.bump();
                let var = self.ident()?;
                self.expect(&Tok::In)?;
                let source = self.expr()?;
                let (body, _) = self.body()?;
                StmtKind::Foreach { var, source, body }
            }
            Tok::While => {
                self.bump();
                let cond = self.expr()?;
                let (body, _) = self.body()?;
                StmtKind::While { cond, body }
            }
            Tok::If => return self.if_stmt(),
            Tok::Break => {
                self.bump();
                self.expect(&Tok::Semi)?;
                StmtKind::Break
            }
            Tok::Continue => {
                self.bump();
                self.expect(&Tok::Semi)?;
                StmtKind::Continue
            }
            Tok::Else => return Err(WqlError::syntax(pos, "`else` without a braced `if` branch")),
            _ => {
                let e = self.expr()?;
                self.expect(&Tok::Semi)?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn if_stmt(&mut self) -> Result<Stmt, WqlError> {
        let pos = self.pos();
        self.expect(&Tok::If)?;
        let cond = self.expr()?;
        let (then, braced) = self.body()?;
        let mut otherwise = Vec::new();
        if braced && self.eat(&Tok::Else) {
            if self.peek() == &Tok::If {
                otherwise.push(self.if_stmt()?);
            } else {
                otherwise = self.body()?.0;
            }
        }
        Ok(Stmt { kind: StmtKind::If { cond, then, otherwise }, pos })
    }

    fn expr(&mut self) -> Result<Expr, WqlError> {
        if let (Tok::Ident(name), Tok::Assign) = (self.peek().clone(), self.peek_at(1)) {
            let pos = self.pos();
            self.bump();
            self.bump();
            let value = self.expr()?;
            return Ok(Expr { kind: ExprKind::Assign(name, Box::new(value)), pos });
        }
        self.or()
    }

    fn binary_chain(
        &mut self,
        ops: &[(Tok, BinOp)],
        next: fn(&mut Self) -> Result<Expr, WqlError>,
    ) -> Result<Expr, WqlError> {
        let mut lhs = next(self)?;
        while let Some(op) = ops.iter().find(|(t, _)| t == self.peek()).map(|(_, op)| *op) {
            let pos = self.pos();
            self.bump();
            let rhs = next(self)?;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, WqlError> {
        self.binary_chain(&[(Tok::OrOr, BinOp::Or)], Self::and)
    }

    fn and(&mut self) -> Result<Expr, WqlError> {
        self.binary_chain(&[(Tok::AndAnd, BinOp::And)], Self::comparison)
    }

    fn comparison(&mut self) -> Result<Expr, WqlError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::In => BinOp::In,
            _ => return Ok(lhs),
        };
        let pos = self.pos();
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos })
    }

    fn additive(&mut self) -> Result<Expr, WqlError> {
        self.binary_chain(&[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<Expr, WqlError> {
        self.binary_chain(
            &[(Tok::Star, BinOp::Mul), (Tok::Slash, BinOp::Div), (Tok::Percent, BinOp::Rem)],
            Self::unary,
        )
    }

    fn unary(&mut self) -> Result<Expr, WqlError> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Bang => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.postfix(),
        };
        self.bump();
        let inner = self.unary()?;
        Ok(Expr { kind: ExprKind::Unary(op, Box::new(inner)), pos })
    }

    fn args(&mut self) -> Result<Vec<Expr>, WqlError> {
        self.expect(&Tok::LParen)?;
        let mut out = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                out.push(self.expr()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(out)
    }

    fn postfix(&mut self) -> Result<Expr, WqlError> {
        let mut e = self.primary()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                    let name = self.ident()?;
                    e = if self.peek() == &Tok::LParen {
                        let args = self.args()?;
                        Expr { kind: ExprKind::Method(Box::new(e), name, args), pos }
                    } else {
                        Expr { kind: ExprKind::Attr(Box::new(e), name), pos }
                    };
                }
                Tok::LBracket => {
                    self.bump();
                    let index = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    e = Expr { kind: ExprKind::Index(Box::new(e), Box::new(index)), pos };
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, WqlError> {
        let pos = self.pos();
        let lit = |l| Ok(Expr { kind: ExprKind::Lit(l), pos });
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                lit(Literal::Int(i))
            }
            Tok::Float(f) => {
                self.bump();
                lit(Literal::Float(f))
            }
            Tok::Str(s) => {
                self.bump();
                lit(Literal::Str(s))
            }
            Tok::True => {
                self.bump();
                lit(Literal::Bool(true))
            }
            Tok::False => {
                self.bump();
                lit(Literal::Bool(false))
            }
            Tok::Nil => {
                self.bump();
                lit(Literal::Nil)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    let args = self.args()?;
                    Ok(Expr { kind: ExprKind::Call(name, args), pos })
                } else {
                    Ok(Expr { kind: ExprKind::Var(name), pos })
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => self.bracket(),
            _ => Err(self.unexpected("an expression")),
        }
    }

    /// `[var in source : pred]` or a list literal.
    fn bracket(&mut self) -> Result<Expr, WqlError> {
        let pos = self.pos();
        self.expect(&Tok::LBracket)?;
        if let (Tok::Ident(var), Tok::In) = (self.peek().clone(), self.peek_at(1)) {
            let save = self.at;
            self.bump();
            self.bump();
            let source = self.additive()?;
            if self.eat(&Tok::Colon) {
                let pred = self.expr()?;
                self.expect(&Tok::RBracket)?;
                return Ok(Expr {
                    kind: ExprKind::Range { var, source: Box::new(source), pred: Box::new(pred) },
                    pos,
                });
            }
            self.at = save;
        }
        let mut items = Vec::new();
        if !self.eat(&Tok::RBracket) {
            loop {
                items.push(self.expr()?);
                if self.eat(&Tok::RBracket) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(Expr { kind: ExprKind::List(items), pos })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_source_is_empty_program() {
        assert_eq!(parse("").unwrap(), Program::default());
        assert_eq!(parse("  # only a comment\n").unwrap(), Program::default());
    }

    #[test]
    fn range_expression_with_predicate() {
        let p = parse("x := [n in lst : n.value = 1];").unwrap();
        let StmtKind::Expr(Expr { kind: ExprKind::Assign(name, value), .. }) = &p.body[0].kind else {
            panic!("not an assignment")
        };
        assert_eq!(name, "x");
        let ExprKind::Range { var, pred, .. } = &value.kind else { panic!("not a range") };
        assert_eq!(var, "n");
        assert!(matches!(pred.kind, ExprKind::Binary(BinOp::Eq, _, _)));
    }

    #[test]
    fn unbraced_body_extends_to_enclosing_end() {
        let p = parse("foreach a in l: x := 1; foreach b in l: y := 2; z := 3;").unwrap();
        assert_eq!(p.body.len(), 1);
        let StmtKind::Foreach { body, .. } = &p.body[0].kind else { panic!() };
        assert_eq!(body.len(), 2);
        let StmtKind::Foreach { body: inner, .. } = &body[1].kind else { panic!() };
        assert_eq!(inner.len(), 2);
    }

    #[test]
    fn braced_if_else() {
        let p = parse("if x = 1: { a := 1; } else { a := 2; } b := 3;").unwrap();
        assert_eq!(p.body.len(), 2);
        let StmtKind::If { then, otherwise, .. } = &p.body[0].kind else { panic!() };
        assert_eq!((then.len(), otherwise.len()), (1, 1));
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let p = parse("a || b && c;").unwrap();
        let StmtKind::Expr(e) = &p.body[0].kind else { panic!() };
        let ExprKind::Binary(BinOp::Or, _, rhs) = &e.kind else { panic!("{e:?}") };
        assert!(matches!(rhs.kind, ExprKind::Binary(BinOp::And, _, _)));
    }

    #[test]
    fn list_literal_with_membership_element() {
        let p = parse("l := [a in b, 2];").unwrap();
        let StmtKind::Expr(Expr { kind: ExprKind::Assign(_, v), .. }) = &p.body[0].kind else { panic!() };
        let ExprKind::List(items) = &v.kind else { panic!() };
        assert_eq!(items.len(), 2);
    }

    #[test]
    fn unbalanced_paren_reports_position() {
        let err = parse("if (!nodes.empty():\n  x := 1;").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 19 });
    }
}
