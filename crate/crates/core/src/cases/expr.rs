//! Closed-form coefficient expressions.
//!
//! An [`Expr`] is a finite sum of separable terms `a · F(x) · G(y)` where each
//! factor is one of `1`, `t^n`, `sin(ωt)`, `cos(ωt)` or `exp(ωt)`. That family
//! covers every coefficient, exact solution and boundary datum in the
//! benchmark catalog, is closed under differentiation, and keeps gradients
//! exact. Products that leave the family (e.g. `sin(x)*cos(x)`) are rejected.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::mesh::Point2;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    One,
    Pow(u32),
    Sin(f64),
    Cos(f64),
    Exp(f64),
}

impl Factor {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Factor::One => 1.0,
            Factor::Pow(n) => t.powi(n as i32),
            Factor::Sin(w) => (w * t).sin(),
            Factor::Cos(w) => (w * t).cos(),
            Factor::Exp(w) => (w * t).exp(),
        }
    }

    /// d/dt as `scale · factor`.
    pub fn derivative(self) -> (f64, Factor) {
        match self {
            Factor::One | Factor::Pow(0) => (0.0, Factor::One),
            Factor::Pow(1) => (1.0, Factor::One),
            Factor::Pow(n) => (n as f64, Factor::Pow(n - 1)),
            Factor::Sin(w) => (w, Factor::Cos(w)),
            Factor::Cos(w) => (-w, Factor::Sin(w)),
            Factor::Exp(w) => (w, Factor::Exp(w)),
        }
    }

    fn product(self, other: Factor) -> Option<Factor> {
        use Factor::*;
        match (self, other) {
            (One, f) | (f, One) => Some(f),
            (Pow(a), Pow(b)) => Some(Pow(a + b)),
            (Exp(a), Exp(b)) => Some(Exp(a + b)),
            _ => None,
        }
    }

    fn fmt_var(self, var: char, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |w: f64| {
            if w == 1.0 {
                var.to_string()
            } else {
                format!("{w}*{var}")
            }
        };
        match self {
            Factor::One => Ok(()),
            Factor::Pow(1) => write!(f, "{var}"),
            Factor::Pow(n) => write!(f, "{var}^{n}"),
            Factor::Sin(w) => write!(f, "sin({})", arg(w)),
            Factor::Cos(w) => write!(f, "cos({})", arg(w)),
            Factor::Exp(w) => write!(f, "exp({})", arg(w)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub fx: Factor,
    pub fy: Factor,
}

impl Term {
    pub fn eval(&self, p: Point2) -> f64 {
        self.coeff * self.fx.eval(p.x) * self.fy.eval(p.y)
    }

    fn dx(&self) -> Term {
        let (s, fx) = self.fx.derivative();
        Term {
            coeff: self.coeff * s,
            fx,
            fy: self.fy,
        }
    }

    fn dy(&self) -> Term {
        let (s, fy) = self.fy.derivative();
        Term {
            coeff: self.coeff * s,
            fx: self.fx,
            fy,
        }
    }

    fn times(&self, other: &Term) -> Option<Term> {
        Some(Term {
            coeff: self.coeff * other.coeff,
            fx: self.fx.product(other.fx)?,
            fy: self.fy.product(other.fy)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Expr {
    terms: Vec<Term>,
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Self::from_term(c, Factor::One, Factor::One)
    }

    pub fn x() -> Self {
        Self::from_term(1.0, Factor::Pow(1), Factor::One)
    }

    pub fn y() -> Self {
        Self::from_term(1.0, Factor::One, Factor::Pow(1))
    }

    pub fn from_term(coeff: f64, fx: Factor, fy: Factor) -> Self {
        Self {
            terms: vec![Term { coeff, fx, fy }],
        }
        .simplified()
    }

    /// Polynomial `Σ c · x^i y^j` from `(i, j, c)` triples.
    pub fn polynomial(monomials: &[(u32, u32, f64)]) -> Self {
        Self {
            terms: monomials
                .iter()
                .map(|&(i, j, c)| Term {
                    coeff: c,
                    fx: Factor::Pow(i),
                    fy: Factor::Pow(j),
                })
                .collect(),
        }
        .simplified()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, p: Point2) -> f64 {
        self.terms.iter().map(|t| t.eval(p)).sum()
    }

    pub fn dx(&self) -> Expr {
        Expr {
            terms: self.terms.iter().map(Term::dx).collect(),
        }
        .simplified()
    }

    pub fn dy(&self) -> Expr {
        Expr {
            terms: self.terms.iter().map(Term::dy).collect(),
        }
        .simplified()
    }

    pub fn gradient(&self, p: Point2) -> [f64; 2] {
        let mut g = [0.0; 2];
        for t in &self.terms {
            g[0] += t.dx().eval(p);
            g[1] += t.dy().eval(p);
        }
        g
    }

    /// `Some(c)` when the expression is the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [] => Some(0.0),
            [t] if t.fx == Factor::One && t.fy == Factor::One => Some(t.coeff),
            _ => None,
        }
    }

    /// `Some((a, b, c))` for `a·x + b·y + c`.
    pub fn as_affine(&self) -> Option<(f64, f64, f64)> {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for t in &self.terms {
            match (t.fx, t.fy) {
                (Factor::One, Factor::One) => c += t.coeff,
                (Factor::Pow(1), Factor::One) => a += t.coeff,
                (Factor::One, Factor::Pow(1)) => b += t.coeff,
                _ => return None,
            }
        }
        Some((a, b, c))
    }

    /// Total polynomial degree, or `None` for transcendental expressions.
    pub fn polynomial_degree(&self) -> Option<u32> {
        let deg = |f: Factor| match f {
            Factor::One => Some(0),
            Factor::Pow(n) => Some(n),
            _ => None,
        };
        self.terms
            .iter()
            .map(|t| Some(deg(t.fx)? + deg(t.fy)?))
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    pub fn try_mul(&self, other: &Expr) -> Result<Expr> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.times(b).ok_or_else(|| {
                    Error::Expr(format!(
                        "product `({})*({})` is not a separable closed form",
                        Expr { terms: vec![*a] },
                        Expr { terms: vec![*b] }
                    ))
                })?);
            }
        }
        Ok(Expr { terms }.simplified())
    }

    /// Merges terms with identical factors and drops zeros.
    fn simplified(mut self) -> Self {
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            let t = normalize(t);
            if let Some(o) = out.iter_mut().find(|o| o.fx == t.fx && o.fy == t.fy) {
                o.coeff += t.coeff;
            } else {
                out.push(t);
            }
        }
        out.retain(|t| t.coeff != 0.0);
        Expr { terms: out }
    }

    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!("unexpected trailing input in `{text}`")));
        }
        Ok(e)
    }
}

fn normalize(mut t: Term) -> Term {
    for f in [&mut t.fx, &mut t.fy] {
        match *f {
            Factor::Pow(0) => *f = Factor::One,
            Factor::Sin(0.0) => {
                *f = Factor::One;
                t.coeff = 0.0;
            }
            Factor::Cos(0.0) | Factor::Exp(0.0) => *f = Factor::One,
            _ => {}
        }
    }
    t
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff < 0.0;
            let mag = t.coeff.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let plain = t.fx == Factor::One && t.fy == Factor::One;
            let mut wrote = false;
            if plain || mag != 1.0 {
                write!(f, "{mag}")?;
                wrote = true;
            }
            for (factor, var) in [(t.fx, 'x'), (t.fy, 'y')] {
                if factor != Factor::One {
                    if wrote {
                        write!(f, "*")?;
                    }
                    factor.fmt_var(var, f)?;
                    wrote = true;
                }
            }
        }
        Ok(())
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(mut self, rhs: Expr) -> Expr {
        self.terms.extend(rhs.terms);
        self.simplified()
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(mut self) -> Expr {
        for t in &mut self.terms {
            t.coeff = -t.coeff;
        }
        self
    }
}

impl Mul<f64> for Expr {
    type Output = Expr;
    fn mul(mut self, s: f64) -> Expr {
        for t in &mut self.terms {
            t.coeff *= s;
        }
        self.simplified()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v = lit
                .parse::<f64>()
                .map_err(|_| Error::Expr(format!("bad number `{lit}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character `{c}` in `{s}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = if self.eat_op('-') {
            -self.product()?
        } else {
            self.eat_op('+');
            self.product()?
        };
        loop {
            if self.eat_op('+') {
                acc = acc + self.product()?;
            } else if self.eat_op('-') {
                acc = acc - self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut acc = self.power()?;
        loop {
            if self.eat_op('*') {
                let rhs = self.power()?;
                acc = acc.try_mul(&rhs)?;
            } else if self.eat_op('/') {
                let rhs = self.power()?;
                let c = rhs
                    .as_constant()
                    .ok_or_else(|| Error::Expr("division only by constants".into()))?;
                if c == 0.0 {
                    return Err(Error::Expr("division by zero".into()));
                }
                acc = acc * (1.0 / c);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let exp = match self.tokens.get(self.pos) {
                Some(Tok::Num(n)) if n.fract() == 0.0 && *n >= 0.0 => *n as u32,
                _ => return Err(Error::Expr("exponent must be a non-negative integer".into())),
            };
            self.pos += 1;
            let mut out = Expr::constant(1.0);
            for _ in 0..exp {
                out = out.try_mul(&base)?;
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Expr("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::Op('(') => {
                let e = self.sum()?;
                if !self.eat_op(')') {
                    return Err(Error::Expr("missing `)`".into()));
                }
                Ok(e)
            }
            Tok::Op('-') => Ok(-self.power()?),
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::x()),
                "y" => Ok(Expr::y()),
                "pi" => Ok(Expr::constant(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    if !self.eat_op('(') {
                        return Err(Error::Expr(format!("`{name}` needs an argument")));
                    }
                    let arg = self.sum()?;
                    if !self.eat_op(')') {
                        return Err(Error::Expr("missing `)`".into()));
                    }
                    let (a, b, c) = arg.as_affine().filter(|&(_, _, c)| c == 0.0).ok_or_else(|| {
                        Error::Expr(format!("`{name}` argument must be w*x or w*y, got `{arg}`"))
                    })?;
                    let make = |w: f64| match name.as_str() {
                        "sin" => Factor::Sin(w),
                        "cos" => Factor::Cos(w),
                        _ => Factor::Exp(w),
                    };
                    let _ = c;
                    match (a != 0.0, b != 0.0) {
                        (true, false) => Ok(Expr::from_term(1.0, make(a), Factor::One)),
                        (false, true) => Ok(Expr::from_term(1.0, Factor::One, make(b))),
                        (false, false) => Ok(Expr::constant(make(0.0).eval(0.0))),
                        (true, true) => Err(Error::Expr(format!(
                            "`{name}` argument must involve one variable, got `{arg}`"
                        ))),
                    }
                }
                _ => Err(Error::Expr(format!("unknown identifier `{name}`"))),
            },
            Tok::Op(c) => Err(Error::Expr(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn parse_catalog_forms() {
        let e = Expr::parse("cos(x)*cos(y)").unwrap();
        assert!((e.eval(p(0.3, 0.7)) - 0.3f64.cos() * 0.7f64.cos()).abs() < 1e-15);
        let e = Expr::parse("exp(x)*cos(y)").unwrap();
        assert!((e.eval(p(0.3, 0.7)) - 0.3f64.exp() * 0.7f64.cos()).abs() < 1e-15);
        let e = Expr::parse("sin(pi*x)*cos(pi*y)").unwrap();
        let pi = std::f64::consts::PI;
        assert!((e.eval(p(0.3, 0.7)) - (pi * 0.3).sin() * (pi * 0.7).cos()).abs() < 1e-15);
        let e = Expr::parse("0.5 - y").unwrap();
        assert_eq!(e.as_affine(), Some((0.0, -1.0, 0.5)));
        let e = Expr::parse("1 + x + y - x^2 + 2*x*y").unwrap();
        assert_eq!(e.polynomial_degree(), Some(2));
        assert!((e.eval(p(0.5, 0.25)) - (1.0 + 0.5 + 0.25 - 0.25 + 0.25)).abs() < 1e-15);
        let e = Expr::parse("sin(3*x)*cos(5*y)").unwrap();
        assert!((e.eval(p(0.2, 0.1)) - 0.6f64.sin() * 0.5f64.cos()).abs() < 1e-15);
        let e = Expr::parse("-2").unwrap();
        assert_eq!(e.as_constant(), Some(-2.0));
        let e = Expr::parse("x/2").unwrap();
        assert_eq!(e.as_affine(), Some((0.5, 0.0, 0.0)));
    }

    #[test]
    fn parse_rejects() {
        assert!(Expr::parse("sin(x)*cos(x)").is_err());
        assert!(Expr::parse("sin(x+y)").is_err());
        assert!(Expr::parse("foo").is_err());
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("1/x").is_err());
        assert!(Expr::parse("(x").is_err());
    }

    #[test]
    fn display_roundtrip() {
        for s in ["cos(x)*cos(y)", "0.5 - y", "x - 0.5", "sin(3*x)*cos(5*y)", "-x^2*y + 3", "exp(x)*cos(y)"] {
            let e = Expr::parse(s).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{s} -> {e}");
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_central_difference(
            x in 0.0f64..1.0, y in 0.0f64..1.0,
            w1 in -4.0f64..4.0, w2 in -4.0f64..4.0, c in -2.0f64..2.0,
        ) {
            let e = Expr::from_term(c, Factor::Sin(w1), Factor::Exp(w2))
                + Expr::from_term(1.0, Factor::Cos(w2), Factor::Pow(3))
                + Expr::polynomial(&[(2, 1, c)]);
            let g = e.gradient(p(x, y));
            let h = 1e-6;
            let fdx = (e.eval(p(x + h, y)) - e.eval(p(x - h, y))) / (2.0 * h);
            let fdy = (e.eval(p(x, y + h)) - e.eval(p(x, y - h))) / (2.0 * h);
            prop_assert!((g[0] - fdx).abs() < 1e-6 * (1.0 + fdx.abs()));
            prop_assert!((g[1] - fdy).abs() < 1e-6 * (1.0 + fdy.abs()));
        }
    }
}
