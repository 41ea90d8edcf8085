use super::{BinOp, Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(ch) = self.src[start..].chars().next() else {
            return Ok((Tok::End, start));
        };
        if ch.is_ascii_digit() || ch == '.' {
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text
                .parse()
                .map_err(|_| err(start, format!("malformed number `{text}`")))?;
            if !value.is_finite() {
                return Err(err(start, format!("number `{text}` is out of range")));
            }
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        self.pos += ch.len_utf8();
        match ch {
            '+' | '-' | '*' | '/' | '^' => Ok((Tok::Op(ch), start)),
            '(' => Ok((Tok::LParen, start)),
            ')' => Ok((Tok::RParen, start)),
            _ => Err(err(start, format!("unexpected character `{ch}`"))),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

const BP_UNARY: u8 = 5;

fn infix_binding(op: char) -> Option<(BinOp, u8, u8)> {
    // (operator, left binding power, right binding power)
    match op {
        '+' => Some((BinOp::Add, 1, 2)),
        '-' => Some((BinOp::Sub, 1, 2)),
        '*' => Some((BinOp::Mul, 3, 4)),
        '/' => Some((BinOp::Div, 3, 4)),
        '^' => Some((BinOp::Pow, 7, BP_UNARY)),
        _ => None,
    }
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<()> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = self.prefix()?;
        while let Tok::Op(c) = self.tok {
            let (op, lbp, rbp) = infix_binding(c).expect("lexer only yields known operators");
            if lbp < min_bp {
                break;
            }
            self.advance()?;
            let rhs = self.expr(rbp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr> {
        let at = self.at;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::Op('-') => {
                self.advance()?;
                let inner = self.expr(BP_UNARY)?;
                Ok(Expr::neg(inner))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr(0)?;
                self.expect_rparen(at)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.advance()?;
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                if self.tok == Tok::LParen {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(err(at, format!("unknown function `{name}`")));
                    };
                    let open = self.at;
                    self.advance()?;
                    let arg = self.expr(0)?;
                    self.expect_rparen(open)?;
                    return Ok(Expr::call(func, arg));
                }
                if Func::from_name(&name).is_some() {
                    return Err(err(self.at, format!("expected `(` after function `{name}`")));
                }
                Ok(Expr::Ident(name))
            }
            Tok::End => {
                if self.lexer.src.trim().is_empty() {
                    Err(err(0, "empty expression"))
                } else {
                    Err(err(at, "expected operand"))
                }
            }
            Tok::RParen => Err(err(at, "expected operand, found `)`")),
            Tok::Op(c) => Err(err(at, format!("expected operand, found `{c}`"))),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<()> {
        match self.tok {
            Tok::RParen => self.advance(),
            Tok::End => Err(err(self.at, format!("unbalanced `(` opened at offset {open}"))),
            _ => Err(err(self.at, "expected `)`")),
        }
    }
}

/// Parses an expression. Errors carry the byte offset of the first problem.
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        lexer: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        at: 0,
    };
    p.advance()?;
    let e = p.expr(0)?;
    match &p.tok {
        Tok::End => Ok(e),
        Tok::RParen => Err(err(p.at, "unbalanced `)`")),
        Tok::Num(_) | Tok::Ident(_) | Tok::LParen => Err(err(
            p.at,
            "unexpected operand (implicit multiplication is not supported)",
        )),
        Tok::Op(c) => Err(err(p.at, format!("unexpected `{c}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp::*;

    fn id(s: &str) -> Expr {
        Expr::ident(s)
    }

    fn offset(text: &str) -> (usize, String) {
        match parse(text) {
            Err(Error::Parse { offset, message }) => (offset, message),
            other => panic!("expected parse error for {text:?}, got {other:?}"),
        }
    }

    #[test]
    fn sphere_component_shape() {
        let e = parse("r^2 * sin(theta)^2").unwrap();
        let expected = Expr::binary(
            Mul,
            Expr::binary(Pow, id("r"), Expr::num(2.0)),
            Expr::binary(Pow, Expr::call(Func::Sin, id("theta")), Expr::num(2.0)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn schwarzschild_component_shape() {
        let e = parse("1 - 2*M/r").unwrap();
        let expected = Expr::binary(
            Sub,
            Expr::num(1.0),
            Expr::binary(Div, Expr::binary(Mul, Expr::num(2.0), id("M")), id("r")),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn dangling_operator_reports_offset() {
        let (at, msg) = offset("2*");
        assert_eq!(at, 2);
        assert!(msg.contains("expected operand"), "{msg}");
    }

    #[test]
    fn error_positions() {
        assert_eq!(offset("").0, 0);
        assert!(offset("   ").1.contains("empty"));
        assert_eq!(offset("(a + b").0, 6);
        assert_eq!(offset("a + b)").0, 5);
        assert_eq!(offset("foo(x)").0, 0);
        assert!(offset("foo(x)").1.contains("unknown function"));
        assert_eq!(offset("2x").0, 1);
        assert_eq!(offset("a $ b").0, 2);
        assert_eq!(offset("sin + 1").0, 4);
        assert_eq!(offset("a * * b").0, 4);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("-a^b").unwrap(),
            Expr::neg(Expr::binary(Pow, id("a"), id("b")))
        );
        assert_eq!(
            parse("a^b^c").unwrap(),
            Expr::binary(Pow, id("a"), Expr::binary(Pow, id("b"), id("c")))
        );
        assert_eq!(
            parse("-a*b").unwrap(),
            Expr::binary(Mul, Expr::neg(id("a")), id("b"))
        );
        assert_eq!(
            parse("a-b-c").unwrap(),
            Expr::binary(Sub, Expr::binary(Sub, id("a"), id("b")), id("c"))
        );
        assert_eq!(
            parse("a^-b").unwrap(),
            Expr::binary(Pow, id("a"), Expr::neg(id("b")))
        );
        assert_eq!(parse("1.5e-3").unwrap(), Expr::num(1.5e-3));
        assert_eq!(parse("pi").unwrap(), Expr::Pi);
    }
}
