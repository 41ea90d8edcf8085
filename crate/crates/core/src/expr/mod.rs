//! The metric-component expression language.
//!
//! Grammar, from loosest to tightest binding: `+ -`, `* /`, unary `-`, `^`
//! (right-associative). Function calls take one argument. There is no
//! implicit multiplication.

mod eval;
mod parse;
pub mod taylor;

use std::fmt;

pub use eval::{Bindings, CompiledExpr, EvalNum};
pub use parse::parse;
pub use taylor::Taylor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression AST. Number literals are finite and non-negative; a leading
/// minus is always a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Neg(_) => PREC_NEG,
            _ => PREC_ATOM,
        }
    }

    /// Identifiers referenced anywhere in the tree, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers(&self, out: &mut Vec<String>) {
        match self {
            Expr::Ident(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_identifiers(out),
            Expr::Binary(_, a, b) => {
                a.collect_identifiers(out);
                b.collect_identifiers(out);
            }
            Expr::Num(_) | Expr::Pi => {}
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Ident(name) => f.write_str(name),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_operand(f, e, e.precedence() < PREC_NEG)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    write_operand(f, lhs, lhs.precedence() <= p)?;
                    write!(f, "{}", op.symbol())?;
                    write_operand(f, rhs, rhs.precedence() < PREC_NEG)
                } else {
                    write_operand(f, lhs, lhs.precedence() < p)?;
                    write!(f, " {} ", op.symbol())?;
                    write_operand(f, rhs, rhs.precedence() <= p)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printer_parenthesizes_only_where_needed() {
        let e = parse("(a - b) - (c - d)").unwrap();
        assert_eq!(e.to_string(), "a - b - (c - d)");
        let e = parse("(-a)^2").unwrap();
        assert_eq!(e.to_string(), "(-a)^2.0");
        let e = parse("-a^2").unwrap();
        assert_eq!(e.to_string(), "-a^2.0");
        let e = parse("a^b^c").unwrap();
        assert_eq!(e.to_string(), "a^b^c");
        let e = parse("(a^b)^c").unwrap();
        assert_eq!(e.to_string(), "(a^b)^c");
        let e = parse("2*-x").unwrap();
        assert_eq!(e.to_string(), "2.0 * -x");
    }

    #[test]
    fn identifiers_in_order() {
        let e = parse("r^2*sin(theta) + r").unwrap();
        assert_eq!(e.identifiers(), vec!["r".to_string(), "theta".to_string()]);
    }
}
