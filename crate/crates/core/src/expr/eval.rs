use std::f64::consts::PI;

use super::taylor::{Taylor, MAX_ORDER, MAX_VARS};
use super::{BinOp, Expr, Func};
use crate::error::{Error, Result};

/// Number types the evaluator runs on. `f64` is plain evaluation; [`Taylor`]
/// carries derivatives. Both follow the same code path so the value of a
/// Taylor evaluation with no seeded variables equals the plain result bit for bit.
pub trait EvalNum: Clone {
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    /// True when all derivatives vanish identically.
    fn is_constant(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// `None` when the divisor is zero.
    fn div(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Self;
    /// Applies `f` given its value and derivatives `f^(k)` at `self.value()`.
    fn apply(&self, derivs: &dyn Fn(usize) -> Vec<f64>) -> Self;
    /// Overwrites the order-0 value, keeping the derivatives.
    fn with_value(self, v: f64) -> Self;
}

impl EvalNum for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Option<Self> {
        (*o != 0.0).then(|| self / o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn apply(&self, derivs: &dyn Fn(usize) -> Vec<f64>) -> Self {
        derivs(0)[0]
    }
    fn with_value(self, v: f64) -> Self {
        v
    }
}

impl EvalNum for Taylor {
    fn constant(v: f64) -> Self {
        Taylor::constant(v)
    }
    fn value(&self) -> f64 {
        Taylor::value(self)
    }
    fn is_constant(&self) -> bool {
        Taylor::is_constant(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.checked_div(o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn apply(&self, derivs: &dyn Fn(usize) -> Vec<f64>) -> Self {
        let order = if Taylor::is_constant(self) { 0 } else { self.order() };
        self.compose(&derivs(order))
    }
    fn with_value(self, v: f64) -> Self {
        Taylor::with_value(self, v)
    }
}

/// Names an expression may refer to: chart coordinates (evaluated at a point)
/// and parameters (fixed values).
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    pub coords: Vec<String>,
    pub params: Vec<(String, f64)>,
}

impl Bindings {
    pub fn new(coords: &[&str], params: &[(&str, f64)]) -> Bindings {
        Bindings {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Coord(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// An expression whose identifiers have been resolved against [`Bindings`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledExpr {
    source: Expr,
    root: Node,
}

impl CompiledExpr {
    /// Resolves every identifier; parameters shadow nothing and coordinates win
    /// over parameters of the same name.
    pub fn compile(expr: &Expr, bindings: &Bindings) -> Result<CompiledExpr> {
        Ok(CompiledExpr {
            source: expr.clone(),
            root: lower(expr, bindings)?,
        })
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    /// True when no coordinate appears in the expression.
    pub fn is_constant(&self) -> bool {
        !mentions_coord(&self.root)
    }

    pub fn eval_real(&self, point: &[f64]) -> Result<f64> {
        let vars: Vec<f64> = point.to_vec();
        eval_node(&self.root, &self.source, &vars)
    }

    /// Taylor expansion at `point`. `seeds[k]` names the coordinate that
    /// becomes Taylor variable `k`; unseeded coordinates are held constant.
    pub fn eval_taylor(&self, point: &[f64], seeds: &[usize], order: usize) -> Result<Taylor> {
        if seeds.len() > MAX_VARS || order > MAX_ORDER {
            return Err(Error::shape(format!(
                "Taylor evaluation supports at most {MAX_VARS} variables and order {MAX_ORDER}"
            )));
        }
        let vars: Vec<Taylor> = point
            .iter()
            .enumerate()
            .map(|(i, &x)| match seeds.iter().position(|&s| s == i) {
                Some(k) => Taylor::variable(x, k, seeds.len(), order),
                None => Taylor::constant(x),
            })
            .collect();
        eval_node(&self.root, &self.source, &vars)
    }

    /// Evaluates with every coordinate seeded in chart order.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Taylor> {
        let seeds: Vec<usize> = (0..point.len()).collect();
        self.eval_taylor(point, &seeds, order)
    }
}

fn mentions_coord(n: &Node) -> bool {
    match n {
        Node::Const(_) => false,
        Node::Coord(_) => true,
        Node::Neg(a) | Node::Call(_, a) => mentions_coord(a),
        Node::Binary(_, a, b) => mentions_coord(a) || mentions_coord(b),
    }
}

fn lower(e: &Expr, b: &Bindings) -> Result<Node> {
    Ok(match e {
        Expr::Num(v) => Node::Const(*v),
        Expr::Pi => Node::Const(PI),
        Expr::Ident(name) => {
            if let Some(i) = b.coords.iter().position(|c| c == name) {
                Node::Coord(i)
            } else if let Some((_, v)) = b.params.iter().find(|(k, _)| k == name) {
                Node::Const(*v)
            } else {
                return Err(Error::Unresolved(name.clone()));
            }
        }
        Expr::Neg(a) => Node::Neg(Box::new(lower(a, b)?)),
        Expr::Binary(op, l, r) => Node::Binary(*op, Box::new(lower(l, b)?), Box::new(lower(r, b)?)),
        Expr::Call(f, a) => Node::Call(*f, Box::new(lower(a, b)?)),
    })
}

fn to_expr(n: &Node) -> Expr {
    match n {
        Node::Const(v) if *v < 0.0 => Expr::neg(Expr::Num(-v)),
        Node::Const(v) => Expr::Num(*v),
        Node::Coord(i) => Expr::Ident(format!("x{i}")),
        Node::Neg(a) => Expr::neg(to_expr(a)),
        Node::Binary(op, a, b) => Expr::binary(*op, to_expr(a), to_expr(b)),
        Node::Call(f, a) => Expr::call(*f, to_expr(a)),
    }
}

fn domain(node: &Node, src: &Expr, message: &str) -> Error {
    Error::Domain {
        expr: find_source(node, src).map_or_else(|| to_expr(node).to_string(), |e| e.to_string()),
        message: message.to_string(),
    }
}

/// Locates the source subtree that lowers to `target`, so errors print the
/// user's identifiers.
fn find_source<'a>(target: &Node, src: &'a Expr) -> Option<&'a Expr> {
    fn same_shape(n: &Node, e: &Expr) -> bool {
        match (n, e) {
            (Node::Const(_), Expr::Num(_) | Expr::Pi | Expr::Ident(_)) => true,
            (Node::Coord(_), Expr::Ident(_)) => true,
            (Node::Neg(a), Expr::Neg(b)) => same_shape(a, b),
            (Node::Binary(o1, a1, b1), Expr::Binary(o2, a2, b2)) => o1 == o2 && same_shape(a1, a2) && same_shape(b1, b2),
            (Node::Call(f1, a1), Expr::Call(f2, a2)) => f1 == f2 && same_shape(a1, a2),
            _ => false,
        }
    }
    fn walk<'a>(target: &Node, e: &'a Expr, found: &mut Vec<&'a Expr>) {
        if same_shape(target, e) {
            found.push(e);
        }
        match e {
            Expr::Neg(a) | Expr::Call(_, a) => walk(target, a, found),
            Expr::Binary(_, a, b) => {
                walk(target, a, found);
                walk(target, b, found);
            }
            _ => {}
        }
    }
    let mut found = Vec::new();
    walk(target, src, &mut found);
    found.into_iter().next()
}

fn power_derivs(a: f64, p: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut coeff = 1.0;
    for k in 0..=order {
        out.push(coeff * a.powf(p - k as f64));
        coeff *= p - k as f64;
    }
    out[0] = a.powf(p);
    out
}

fn int_pow<T: EvalNum>(base: &T, n: i64) -> Option<T> {
    if n == 0 {
        return Some(T::constant(1.0));
    }
    let mut e = n.unsigned_abs();
    let mut acc: Option<T> = None;
    let mut sq = base.clone();
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => sq.clone(),
                Some(a) => a.mul(&sq),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        sq = sq.mul(&sq);
    }
    let acc = acc.expect("nonzero exponent sets the accumulator");
    if n < 0 {
        T::constant(1.0).div(&acc)
    } else {
        Some(acc)
    }
}

fn eval_node<T: EvalNum>(n: &Node, src: &Expr, vars: &[T]) -> Result<T> {
    match n {
        Node::Const(v) => Ok(T::constant(*v)),
        Node::Coord(i) => Ok(vars[*i].clone()),
        Node::Neg(a) => Ok(eval_node(a, src, vars)?.neg()),
        Node::Binary(op, a, b) => {
            let x = eval_node(a, src, vars)?;
            let y = eval_node(b, src, vars)?;
            match op {
                BinOp::Add => Ok(x.add(&y)),
                BinOp::Sub => Ok(x.sub(&y)),
                BinOp::Mul => Ok(x.mul(&y)),
                BinOp::Div => x.div(&y).ok_or_else(|| domain(n, src, "division by zero")),
                BinOp::Pow => {
                    let p = y.value();
                    if y.is_constant() && p.fract() == 0.0 && p.abs() <= 1024.0 {
                        return int_pow(&x, p as i64).ok_or_else(|| domain(n, src, "zero raised to a negative power"));
                    }
                    let a = x.value();
                    if a <= 0.0 {
                        return Err(domain(n, src, "non-integer power of a non-positive base"));
                    }
                    if y.is_constant() {
                        return Ok(x.apply(&|k| power_derivs(a, p, k)));
                    }
                    // a^b = exp(b log a)
                    let ln = x.apply(&|k| log_derivs(a, k));
                    let prod = y.mul(&ln);
                    let e = prod.value().exp();
                    let mut out = prod.apply(&|k| vec![e; k + 1]);
                    out = out.with_value(a.powf(p));
                    Ok(out)
                }
            }
        }
        Node::Call(f, a) => {
            let x = eval_node(a, src, vars)?;
            let v = x.value();
            match f {
                Func::Sin => {
                    let (s, c) = (v.sin(), v.cos());
                    Ok(x.apply(&|k| (0..=k).map(|i| [s, c, -s, -c][i % 4]).collect()))
                }
                Func::Cos => {
                    let (s, c) = (v.sin(), v.cos());
                    Ok(x.apply(&|k| (0..=k).map(|i| [c, -s, -c, s][i % 4]).collect()))
                }
                Func::Tan => {
                    let (s, c) = (v.sin(), v.cos());
                    let sin = x.apply(&|k| (0..=k).map(|i| [s, c, -s, -c][i % 4]).collect());
                    let cos = x.apply(&|k| (0..=k).map(|i| [c, -s, -c, s][i % 4]).collect());
                    let q = sin.div(&cos).ok_or_else(|| domain(n, src, "tangent at a pole"))?;
                    Ok(q.with_value(v.tan()))
                }
                Func::Exp => {
                    let e = v.exp();
                    Ok(x.apply(&|k| vec![e; k + 1]))
                }
                Func::Log => {
                    if v <= 0.0 {
                        return Err(domain(n, src, "logarithm of a non-positive value"));
                    }
                    Ok(x.apply(&|k| log_derivs(v, k)))
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain(n, src, "square root of a negative value"));
                    }
                    if v == 0.0 && !x.is_constant() {
                        return Err(domain(n, src, "square root is not differentiable at zero"));
                    }
                    let r = v.sqrt();
                    Ok(x.apply(&|k| {
                        let mut d = power_derivs(v, 0.5, k);
                        d[0] = r;
                        d
                    }))
                }
                Func::Sinh => {
                    let (s, c) = (v.sinh(), v.cosh());
                    Ok(x.apply(&|k| (0..=k).map(|i| if i % 2 == 0 { s } else { c }).collect()))
                }
                Func::Cosh => {
                    let (s, c) = (v.sinh(), v.cosh());
                    Ok(x.apply(&|k| (0..=k).map(|i| if i % 2 == 0 { c } else { s }).collect()))
                }
                Func::Tanh => {
                    let (s, c) = (v.sinh(), v.cosh());
                    let sinh = x.apply(&|k| (0..=k).map(|i| if i % 2 == 0 { s } else { c }).collect());
                    let cosh = x.apply(&|k| (0..=k).map(|i| if i % 2 == 0 { c } else { s }).collect());
                    let q = sinh.div(&cosh).expect("cosh never vanishes");
                    Ok(q.with_value(v.tanh()))
                }
            }
        }
    }
}

fn log_derivs(a: f64, order: usize) -> Vec<f64> {
    let mut out = vec![a.ln()];
    // d^k/da^k ln a = (-1)^(k-1) (k-1)! / a^k
    let mut c = 1.0 / a;
    for k in 1..=order {
        out.push(c);
        c *= -(k as f64) / a;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn compile(text: &str, coords: &[&str], params: &[(&str, f64)]) -> CompiledExpr {
        CompiledExpr::compile(&parse(text).unwrap(), &Bindings::new(coords, params)).unwrap()
    }

    #[test]
    fn sine_at_half_pi() {
        let e = compile("sin(x)", &["x"], &[]);
        let t = e.eval_jet(&[PI / 2.0], 3).unwrap();
        assert!((t.value() - 1.0).abs() < 1e-15);
        assert!(t.partial(&[0]).abs() < 1e-15);
        assert!((t.partial(&[0, 0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_at_three() {
        let e = compile("x^2", &["x"], &[]);
        let t = e.eval_jet(&[3.0], 3).unwrap();
        assert_eq!(t.value(), 9.0);
        assert_eq!(t.partial(&[0]), 6.0);
        assert_eq!(t.partial(&[0, 0]), 2.0);
        assert_eq!(t.partial(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn schwarzschild_lapse() {
        let e = compile("1 - 2*M/r", &["r"], &[("M", 1.0)]);
        let t = e.eval_jet(&[4.0], 3).unwrap();
        assert_eq!(t.value(), 0.5);
        assert!((t.partial(&[0]) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn unresolved_identifier_is_an_error() {
        let err = CompiledExpr::compile(&parse("x + y").unwrap(), &Bindings::new(&["x"], &[])).unwrap_err();
        assert_eq!(err, Error::Unresolved("y".into()));
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = compile("1 + log(x - 2)", &["x"], &[]);
        match e.eval_real(&[1.0]) {
            Err(Error::Domain { expr, .. }) => assert_eq!(expr, "log(x - 2.0)"),
            other => panic!("{other:?}"),
        }
        assert!(compile("sqrt(x)", &["x"], &[]).eval_real(&[-1.0]).is_err());
        assert!(compile("1/x", &["x"], &[]).eval_real(&[0.0]).is_err());
        assert!(compile("sqrt(x)", &["x"], &[]).eval_jet(&[0.0], 2).is_err());
        assert_eq!(compile("sqrt(x)", &["x"], &[]).eval_real(&[0.0]).unwrap(), 0.0);
        assert!(compile("x^0.5", &["x"], &[]).eval_real(&[-2.0]).is_err());
        assert_eq!(compile("x^3", &["x"], &[]).eval_real(&[-2.0]).unwrap(), -8.0);
        assert_eq!(compile("x^-2", &["x"], &[]).eval_real(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn variable_exponent_and_functions() {
        // f = x^y at (2, 3): ∂x = y x^(y-1) = 12, ∂y = ln2 · 8
        let e = compile("x^y", &["x", "y"], &[]);
        let t = e.eval_jet(&[2.0, 3.0], 2).unwrap();
        assert!((t.value() - 8.0).abs() < 1e-14);
        assert!((t.partial(&[0]) - 12.0).abs() < 1e-12);
        assert!((t.partial(&[1]) - 8.0 * 2f64.ln()).abs() < 1e-12);
        let e = compile("tan(x) + tanh(x) + cosh(x) - sinh(x) + exp(-x)", &["x"], &[]);
        let x = 0.3f64;
        let t = e.eval_jet(&[x], 2).unwrap();
        let d1 = 1.0 / x.cos().powi(2) + 1.0 / x.cosh().powi(2) + x.sinh() - x.cosh() - (-x).exp();
        assert!((t.partial(&[0]) - d1).abs() < 1e-12);
    }

    #[test]
    fn partial_seeding_holds_other_coordinates_fixed() {
        let e = compile("x*y*y", &["x", "y"], &[]);
        let t = e.eval_taylor(&[2.0, 3.0], &[1], 3).unwrap();
        assert_eq!(t.nvars(), 1);
        assert_eq!(t.partial(&[0]), 12.0);
        assert_eq!(t.partial(&[0, 0]), 4.0);
    }
}
