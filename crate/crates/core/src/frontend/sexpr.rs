//! S-expression reader for the WebAssembly text format.

use std::fmt;

use super::error::{FrontendError, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    /// A keyword, identifier (`$name`), number or reserved token.
    Word(String, Pos),
    /// A decoded string literal.
    Str(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Word(_, p) | SExpr::Str(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn word(&self) -> Option<&str> {
        match self {
            SExpr::Word(w, _) => Some(w),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            _ => None,
        }
    }

    /// Head keyword of a list, e.g. `func` for `(func ...)`.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(SExpr::word)
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Word(w, _) => f.write_str(w),
            SExpr::Str(s, _) => write!(f, "{s:?}"),
            SExpr::List(items, _) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    at: usize,
    line: u32,
    col: u32,
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.at + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if c & 0xC0 != 0x80 {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), FrontendError> {
        loop {
            match (self.peek(), self.peek2()) {
                (Some(c), _) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                (Some(b';'), Some(b';')) => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some(b'('), Some(b';')) => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    let mut depth = 1;
                    while depth > 0 {
                        match (self.peek(), self.peek2()) {
                            (None, _) => return Err(FrontendError::syntax(start, "unterminated block comment")),
                            (Some(b'('), Some(b';')) => {
                                self.bump();
                                self.bump();
                                depth += 1;
                            }
                            (Some(b';'), Some(b')')) => {
                                self.bump();
                                self.bump();
                                depth -= 1;
                            }
                            _ => {
                                self.bump();
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn string(&mut self) -> Result<SExpr, FrontendError> {
        let start = self.pos();
        self.bump();
        let mut bytes = Vec::new();
        loop {
            let c = self
                .bump()
                .ok_or_else(|| FrontendError::syntax(start, "unterminated string"))?;
            match c {
                b'"' => break,
                b'\\' => {
                    let e = self
                        .bump()
                        .ok_or_else(|| FrontendError::syntax(start, "unterminated string"))?;
                    match e {
                        b'n' => bytes.push(b'\n'),
                        b't' => bytes.push(b'\t'),
                        b'r' => bytes.push(b'\r'),
                        b'\\' => bytes.push(b'\\'),
                        b'"' => bytes.push(b'"'),
                        b'\'' => bytes.push(b'\''),
                        b'u' => {
                            let p = self.pos();
                            if self.bump() != Some(b'{') {
                                return Err(FrontendError::syntax(p, "malformed unicode escape"));
                            }
                            let mut hex = String::new();
                            while let Some(h) = self.bump() {
                                if h == b'}' {
                                    break;
                                }
                                hex.push(h as char);
                            }
                            let ch = u32::from_str_radix(&hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| FrontendError::syntax(p, "malformed unicode escape"))?;
                            let mut buf = [0u8; 4];
                            bytes.extend_from_slice(ch.encode_utf8(&mut buf).as_bytes());
                        }
                        h if h.is_ascii_hexdigit() => {
                            let p = self.pos();
                            let l = self
                                .bump()
                                .filter(u8::is_ascii_hexdigit)
                                .ok_or_else(|| FrontendError::syntax(p, "malformed byte escape"))?;
                            let v = u8::from_str_radix(&format!("{}{}", h as char, l as char), 16)
                                .map_err(|_| FrontendError::syntax(p, "malformed byte escape"))?;
                            bytes.push(v);
                        }
                        _ => return Err(FrontendError::syntax(self.pos(), "unknown escape sequence")),
                    }
                }
                _ => bytes.push(c),
            }
        }
        Ok(SExpr::Str(String::from_utf8_lossy(&bytes).into_owned(), start))
    }

    fn word(&mut self) -> SExpr {
        let start = self.pos();
        let from = self.at;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b'"' || c == b';' {
                break;
            }
            self.bump();
        }
        let text = String::from_utf8_lossy(&self.src[from..self.at]).into_owned();
        SExpr::Word(text, start)
    }
}

/// Reads every top-level s-expression in `src`.
pub fn read_all(src: &str) -> Result<Vec<SExpr>, FrontendError> {
    let mut r = Reader { src: src.as_bytes(), at: 0, line: 1, col: 1 };
    // Stack of open lists: (items, opening position).
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut top = Vec::new();
    loop {
        r.skip_trivia()?;
        let Some(c) = r.peek() else { break };
        let item = match c {
            b'(' => {
                stack.push((Vec::new(), r.pos()));
                r.bump();
                continue;
            }
            b')' => {
                let p = r.pos();
                r.bump();
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| FrontendError::syntax(p, "unbalanced ')'"))?;
                SExpr::List(items, open)
            }
            b'"' => r.string()?,
            _ => r.word(),
        };
        match stack.last_mut() {
            Some((items, _)) => items.push(item),
            None => top.push(item),
        }
    }
    if let Some((_, open)) = stack.last() {
        return Err(FrontendError::syntax(*open, "unclosed '('"));
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_comments() {
        let v = read_all("(module ;; c\n (; block (; nested ;) ;) (func $f))").unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "(module (func $f))");
    }

    #[test]
    fn positions_are_one_based() {
        let v = read_all("\n  (func)").unwrap();
        assert_eq!(v[0].pos(), Pos { line: 2, col: 3 });
    }

    #[test]
    fn string_escapes() {
        let v = read_all(r#"("a\n\41\u{42}")"#).unwrap();
        assert_eq!(v[0].list().unwrap()[0], SExpr::Str("a\nAB".into(), Pos { line: 1, col: 2 }));
    }

    #[test]
    fn unbalanced() {
        assert!(read_all("(module").is_err());
        assert!(read_all(")").is_err());
    }
}
