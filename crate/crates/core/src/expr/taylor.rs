//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Taylor`] number holds the coefficients `c_α` of the local expansion
//! `f(x₀ + h) = Σ_α c_α h^α` over all multi-indices with `|α| ≤ order`.
//! The partial derivative `∂^α f(x₀)` is `α! · c_α`. Products are truncated
//! polynomial products, so every derivative up to the order is exact up to
//! rounding.
//!
//! Coefficients are stored densely in graded order (degree 0, then degree 1,
//! ...). Constants are stored with a single coefficient and combine with any
//! variable count.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Highest truncation order supported by the coefficient layouts.
pub const MAX_ORDER: usize = 5;
/// Highest number of independent variables.
pub const MAX_VARS: usize = 6;

const NONE: u16 = u16::MAX;

struct Layout {
    exps: Vec<[u8; MAX_VARS]>,
    /// `upto[d]` = number of monomials with degree `<= d`.
    upto: [usize; MAX_ORDER + 1],
    /// `(i, j, k)` with `m_i * m_j = m_k`, sorted by the degree of `m_k`.
    mul: Vec<(u16, u16, u16)>,
    mul_upto: [usize; MAX_ORDER + 1],
    /// `raise[i][v]` = index of `m_i * x_v` when its degree fits.
    raise: Vec<[u16; MAX_VARS]>,
}

impl Layout {
    fn build(nvars: usize) -> Layout {
        let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
        let mut upto = [0usize; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_VARS];
            push_degree(nvars, 0, d as u8, &mut cur, &mut exps);
            upto[d] = exps.len();
        }
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let lookup = |e: &[u8; MAX_VARS]| -> Option<usize> { exps.iter().position(|x| x == e) };

        let mut raise = vec![[NONE; MAX_VARS]; exps.len()];
        for (i, e) in exps.iter().enumerate() {
            if degree[i] as usize == MAX_ORDER {
                continue;
            }
            for v in 0..nvars {
                let mut f = *e;
                f[v] += 1;
                raise[i][v] = lookup(&f).expect("raised monomial present") as u16;
            }
        }

        let mut mul = Vec::new();
        for i in 0..exps.len() {
            for j in 0..exps.len() {
                if degree[i] as usize + degree[j] as usize > MAX_ORDER {
                    continue;
                }
                let mut f = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    f[v] = exps[i][v] + exps[j][v];
                }
                let k = lookup(&f).expect("product monomial present");
                mul.push((i as u16, j as u16, k as u16));
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree[k as usize]);
        let mut mul_upto = [0usize; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            mul_upto[d] = mul
                .iter()
                .take_while(|&&(_, _, k)| degree[k as usize] as usize <= d)
                .count();
        }
        Layout {
            exps,
            upto,
            mul,
            mul_upto,
            raise,
        }
    }

    fn index_of(&self, exp: &[u8; MAX_VARS]) -> Option<usize> {
        let d: u8 = exp.iter().sum();
        if d as usize > MAX_ORDER {
            return None;
        }
        let start = if d == 0 { 0 } else { self.upto[d as usize - 1] };
        (start..self.upto[d as usize]).find(|&i| &self.exps[i] == exp)
    }
}

fn push_degree(nvars: usize, var: usize, left: u8, cur: &mut [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if var + 1 >= nvars.max(1) {
        if nvars == 0 {
            if left == 0 {
                out.push(*cur);
            }
            return;
        }
        cur[var] = left;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[var] = k;
        push_degree(nvars, var + 1, left - k, cur, out);
    }
    cur[var] = 0;
}

fn layout(nvars: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_VARS + 1] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    LAYOUTS[nvars].get_or_init(|| Layout::build(nvars))
}

/// Number of coefficients of a Taylor number in `nvars` variables truncated at `order`.
pub fn coefficient_count(nvars: usize, order: usize) -> usize {
    assert!(nvars <= MAX_VARS && order <= MAX_ORDER);
    layout(nvars).upto[order]
}

/// Truncated Taylor expansion of a scalar function at a point.
#[derive(Clone, PartialEq)]
pub struct Taylor {
    nvars: u8,
    order: u8,
    c: Vec<f64>,
}

impl fmt::Debug for Taylor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            write!(f, "Taylor({})", self.c[0])
        } else {
            write!(f, "Taylor(n={}, order={}, {:?})", self.nvars, self.order, self.c)
        }
    }
}

impl Taylor {
    /// A constant: all derivatives vanish, valid at every order.
    pub fn constant(value: f64) -> Taylor {
        Taylor {
            nvars: 0,
            order: MAX_ORDER as u8,
            c: vec![value],
        }
    }

    /// The seeded variable `x_var` with value `value`.
    pub fn variable(value: f64, var: usize, nvars: usize, order: usize) -> Taylor {
        assert!(var < nvars && nvars <= MAX_VARS && order <= MAX_ORDER);
        let lay = layout(nvars);
        let mut c = vec![0.0; lay.upto[order]];
        c[0] = value;
        if order >= 1 {
            c[1 + var] = 1.0;
        }
        Taylor {
            nvars: nvars as u8,
            order: order as u8,
            c,
        }
    }

    /// Builds a Taylor number from raw graded coefficients.
    pub fn from_coefficients(nvars: usize, order: usize, coefficients: Vec<f64>) -> Taylor {
        assert_eq!(coefficients.len(), coefficient_count(nvars, order));
        Taylor {
            nvars: nvars as u8,
            order: order as u8,
            c: coefficients,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.c.len() == 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Raw coefficient `c_α` for the exponent vector `alpha`.
    pub fn coefficient(&self, alpha: &[u8]) -> f64 {
        let mut e = [0u8; MAX_VARS];
        e[..alpha.len()].copy_from_slice(alpha);
        let deg: usize = e.iter().map(|&x| x as usize).sum();
        if deg == 0 {
            return self.c[0];
        }
        if self.is_constant() || deg > self.order() {
            return 0.0;
        }
        match layout(self.nvars()).index_of(&e) {
            Some(i) => self.c[i],
            None => 0.0,
        }
    }

    /// Mixed partial derivative along the listed variables, e.g. `[0, 0, 2]` is `∂³/∂x₀²∂x₂`.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut e = [0u8; MAX_VARS];
        for &v in vars {
            e[v] += 1;
        }
        let factorial: f64 = e.iter().map(|&k| factorial(k as usize)).product();
        factorial * self.coefficient(&e[..])
    }

    /// Reduces the truncation order (never raises it).
    pub fn truncate(&self, order: usize) -> Taylor {
        if self.is_constant() || order >= self.order() {
            return self.clone();
        }
        let n = layout(self.nvars()).upto[order];
        Taylor {
            nvars: self.nvars,
            order: order as u8,
            c: self.c[..n].to_vec(),
        }
    }

    /// `∂/∂x_var` as a Taylor number of one lower order.
    ///
    /// Panics when called on a non-constant order-0 number; callers check
    /// orders first.
    pub fn derivative(&self, var: usize) -> Taylor {
        if self.is_constant() {
            return Taylor::constant(0.0);
        }
        assert!(self.order > 0, "derivative of an order-0 Taylor number");
        let lay = layout(self.nvars());
        let order = self.order() - 1;
        let n = lay.upto[order];
        let mut c = vec![0.0; n];
        for (i, out) in c.iter_mut().enumerate() {
            let src = lay.raise[i][var];
            *out = (lay.exps[i][var] as f64 + 1.0) * self.c[src as usize];
        }
        Taylor {
            nvars: self.nvars,
            order: order as u8,
            c,
        }
    }

    /// Same derivatives, order-0 coefficient replaced by `v`.
    pub fn with_value(mut self, v: f64) -> Taylor {
        self.c[0] = v;
        self
    }

    pub fn scale(&self, s: f64) -> Taylor {
        Taylor {
            nvars: self.nvars,
            order: self.order,
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    fn combine(&self, other: &Taylor, sign: f64) -> Taylor {
        match (self.is_constant(), other.is_constant()) {
            (true, true) => Taylor::constant(if sign > 0.0 { self.c[0] + other.c[0] } else { self.c[0] - other.c[0] }),
            (false, true) => {
                let mut out = self.clone();
                out.c[0] = if sign > 0.0 { self.c[0] + other.c[0] } else { self.c[0] - other.c[0] };
                out
            }
            (true, false) => {
                let mut out = other.scale(sign);
                out.c[0] = if sign > 0.0 { self.c[0] + other.c[0] } else { self.c[0] - other.c[0] };
                out
            }
            (false, false) => {
                assert_eq!(self.nvars, other.nvars, "mixed variable counts");
                let order = self.order.min(other.order);
                let n = layout(self.nvars()).upto[order as usize];
                let c = (0..n)
                    .map(|i| if sign > 0.0 { self.c[i] + other.c[i] } else { self.c[i] - other.c[i] })
                    .collect();
                Taylor {
                    nvars: self.nvars,
                    order,
                    c,
                }
            }
        }
    }

    fn product(&self, other: &Taylor) -> Taylor {
        if other.is_constant() {
            let mut out = self.scale(other.c[0]);
            out.c[0] = self.c[0] * other.c[0];
            return out;
        }
        if self.is_constant() {
            let mut out = other.scale(self.c[0]);
            out.c[0] = self.c[0] * other.c[0];
            return out;
        }
        assert_eq!(self.nvars, other.nvars, "mixed variable counts");
        let lay = layout(self.nvars());
        let order = self.order.min(other.order);
        let mut c = vec![0.0; lay.upto[order as usize]];
        for &(i, j, k) in &lay.mul[..lay.mul_upto[order as usize]] {
            c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        c[0] = self.c[0] * other.c[0];
        Taylor {
            nvars: self.nvars,
            order,
            c,
        }
    }

    /// `self += a * b` without allocating an intermediate product.
    pub fn add_product(&mut self, a: &Taylor, b: &Taylor) {
        if a.is_constant() || b.is_constant() || self.is_constant() {
            let p = a.product(b);
            *self = self.combine(&p, 1.0);
            return;
        }
        let lay = layout(a.nvars());
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            self.c.truncate(lay.upto[order as usize]);
            self.order = order;
        }
        for &(i, j, k) in &lay.mul[..lay.mul_upto[order as usize]] {
            self.c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
    }

    /// `f(self)` given `derivs[k] = f⁽ᵏ⁾(self.value())` for `k = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Taylor {
        if self.is_constant() {
            return Taylor::constant(derivs[0]);
        }
        let order = self.order();
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut out = Taylor {
            nvars: self.nvars,
            order: self.order,
            c: vec![0.0; self.c.len()],
        };
        let mut power = delta.clone();
        for k in 1..=order {
            let w = derivs[k] / factorial(k);
            for (o, p) in out.c.iter_mut().zip(&power.c) {
                *o += w * p;
            }
            if k < order {
                power = power.product(&delta);
            }
        }
        out.c[0] = derivs[0];
        out
    }

    /// `self^p` for a real exponent; `None` unless the value is positive.
    pub fn powf(&self, p: f64) -> Option<Taylor> {
        let a = self.value();
        if !(a > 0.0) {
            return None;
        }
        let order = if self.is_constant() { 0 } else { self.order() };
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coeff = 1.0;
        for (k, slot) in d.iter_mut().enumerate().take(order + 1) {
            *slot = coeff * a.powf(p - k as f64);
            coeff *= p - k as f64;
        }
        Some(self.compose(&d[..=order]).with_value(a.powf(p)))
    }

    pub fn sqrt(&self) -> Option<Taylor> {
        self.powf(0.5).map(|t| t.with_value(self.value().sqrt()))
    }

    /// Division; `None` when the divisor vanishes at the expansion point.
    pub fn checked_div(&self, other: &Taylor) -> Option<Taylor> {
        let b0 = other.value();
        if b0 == 0.0 {
            return None;
        }
        let order = if other.is_constant() { 0 } else { other.order() };
        let mut d = [0.0; MAX_ORDER + 1];
        // d[k] = (-1)^k k! / b0^(k+1)
        let mut sign = 1.0;
        let mut fact = 1.0;
        let mut pw = 1.0 / b0;
        for (k, slot) in d.iter_mut().enumerate().take(order + 1) {
            if k > 0 {
                sign = -sign;
                fact *= k as f64;
                pw /= b0;
            }
            *slot = sign * fact * pw;
        }
        let recip = other.compose(&d);
        let mut out = self.product(&recip);
        out.c[0] = self.value() / b0;
        Some(out)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        self.combine(rhs, -1.0)
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        self.product(rhs)
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(self, rhs: Taylor) -> Taylor {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: Taylor) -> Taylor {
        self.combine(&rhs, -1.0)
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        self.product(&rhs)
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}
