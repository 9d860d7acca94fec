//! Benchmark problems and piecewise coefficient fields.
//!
//! Coefficients are [`Piecewise`] fields: a list of half-plane regions, each
//! carrying a closed-form [`Expr`], plus a fallback. Region membership is
//! decided by a *selector* point (the element centroid during assembly) so
//! that quadrature points on an element edge never straddle a discontinuity.

mod expr;

use std::fmt;

pub use expr::{Expr, Factor, Term};

use crate::mesh::{Domain, ElementKind, Point2};
use crate::{Error, Result};

/// The open half-plane `a·x + b·y < c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.a * p.x + self.b * p.y < self.c
    }

    /// Signed distance-like value, negative inside.
    pub fn level(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y - self.c
    }
}

impl fmt::Display for HalfPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs = Expr::polynomial(&[(1, 0, self.a), (0, 1, self.b)]);
        write!(f, "{lhs} < {}", self.c)
    }
}

/// A field defined by the first region containing the selector point, or
/// `otherwise` when none does.
#[derive(Clone, Debug, PartialEq)]
pub struct Piecewise<T> {
    pieces: Vec<(HalfPlane, T)>,
    otherwise: T,
}

pub type ScalarField = Piecewise<Expr>;
pub type VectorField = Piecewise<[Expr; 2]>;

impl<T> Piecewise<T> {
    pub fn uniform(value: T) -> Self {
        Self {
            pieces: Vec::new(),
            otherwise: value,
        }
    }

    pub fn new(pieces: Vec<(HalfPlane, T)>, otherwise: T) -> Self {
        Self { pieces, otherwise }
    }

    pub fn select(&self, selector: Point2) -> &T {
        self.pieces
            .iter()
            .find(|(r, _)| r.contains(selector))
            .map_or(&self.otherwise, |(_, v)| v)
    }

    pub fn pieces(&self) -> &[(HalfPlane, T)] {
        &self.pieces
    }

    pub fn otherwise(&self) -> &T {
        &self.otherwise
    }

    pub fn is_uniform(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Smallest |level| of `p` over all region boundaries; used to keep
    /// sample points strictly inside a region.
    pub fn distance_to_interface(&self, p: Point2) -> f64 {
        self.pieces
            .iter()
            .map(|(r, _)| r.level(p).abs() / r.a.hypot(r.b))
            .fold(f64::INFINITY, f64::min)
    }
}

impl ScalarField {
    pub fn eval(&self, p: Point2, selector: Point2) -> f64 {
        self.select(selector).eval(p)
    }

    pub fn gradient(&self, p: Point2, selector: Point2) -> [f64; 2] {
        self.select(selector).gradient(p)
    }

    /// `Some(c)` for a uniform constant field.
    pub fn as_constant(&self) -> Option<f64> {
        if self.is_uniform() {
            self.otherwise.as_constant()
        } else {
            None
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_piecewise(text, Expr::parse)
    }
}

impl VectorField {
    pub fn eval(&self, p: Point2, selector: Point2) -> [f64; 2] {
        let [bx, by] = self.select(selector);
        [bx.eval(p), by.eval(p)]
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_piecewise(text, parse_vector)
    }
}

fn fmt_piecewise<T>(
    f: &mut fmt::Formatter<'_>,
    field: &Piecewise<T>,
    item: impl Fn(&T) -> String,
) -> fmt::Result {
    for (r, v) in &field.pieces {
        write!(f, "{} if {r} else ", item(v))?;
    }
    f.write_str(&item(&field.otherwise))
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_piecewise(f, self, |e| e.to_string())
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_piecewise(f, self, |[a, b]| format!("[{a}, {b}]"))
    }
}

fn parse_vector(text: &str) -> Result<[Expr; 2]> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::Expr(format!("expected `[bx, by]`, got `{text}`")))?;
    let parts: Vec<&str> = inner.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([Expr::parse(a)?, Expr::parse(b)?]),
        _ => Err(Error::Expr(format!("expected two components in `{text}`"))),
    }
}

/// Parses `v₁ if lhs < rhs else v₂ if … else vₙ` where each condition is
/// affine in x and y.
fn parse_piecewise<T>(text: &str, item: impl Fn(&str) -> Result<T>) -> Result<Piecewise<T>> {
    let mut pieces = Vec::new();
    let mut rest = text.trim();
    loop {
        let Some((value, tail)) = rest.split_once(" if ") else {
            return Ok(Piecewise::new(pieces, item(rest)?));
        };
        let (cond, tail) = tail
            .split_once(" else ")
            .ok_or_else(|| Error::Expr(format!("`if` without `else` in `{text}`")))?;
        pieces.push((parse_condition(cond)?, item(value)?));
        rest = tail.trim();
    }
}

fn parse_condition(cond: &str) -> Result<HalfPlane> {
    let (lhs, rhs, flip) = if let Some((l, r)) = cond.split_once('<') {
        (l, r, false)
    } else if let Some((l, r)) = cond.split_once('>') {
        (l, r, true)
    } else {
        return Err(Error::Expr(format!("condition `{cond}` needs `<` or `>`")));
    };
    let diff = Expr::parse(lhs)? - Expr::parse(rhs)?;
    let (a, b, c0) = diff
        .as_affine()
        .ok_or_else(|| Error::Expr(format!("condition `{cond}` must be affine in x and y")))?;
    Ok(if flip {
        HalfPlane::new(-a, -b, c0)
    } else {
        HalfPlane::new(a, b, -c0)
    })
}

/// Right-hand side of the PDE.
#[derive(Clone, Debug, PartialEq)]
pub enum Forcing {
    /// `f = β·∇λ − cλ` evaluated from the exact solution.
    Manufactured,
    Given(ScalarField),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestCase {
    pub id: String,
    pub description: String,
    pub domain: Domain,
    pub element_kind: ElementKind,
    pub beta: VectorField,
    pub c: ScalarField,
    pub exact: Option<ScalarField>,
    pub forcing: Forcing,
    /// Dirichlet data on the inflow boundary.
    pub inflow: ScalarField,
}

impl TestCase {
    /// A case whose forcing and inflow data are derived from `exact`.
    pub fn manufactured(
        id: &str,
        description: &str,
        domain: Domain,
        element_kind: ElementKind,
        beta: VectorField,
        c: ScalarField,
        exact: ScalarField,
    ) -> Self {
        Self {
            id: id.to_string(),
            description: description.to_string(),
            domain,
            element_kind,
            beta,
            c,
            inflow: exact.clone(),
            exact: Some(exact),
            forcing: Forcing::Manufactured,
        }
    }

    pub fn with_element(mut self, kind: ElementKind) -> Self {
        self.element_kind = kind;
        self
    }

    pub fn beta_at(&self, p: Point2, selector: Point2) -> [f64; 2] {
        self.beta.eval(p, selector)
    }

    pub fn c_at(&self, p: Point2, selector: Point2) -> f64 {
        self.c.eval(p, selector)
    }

    pub fn forcing_at(&self, p: Point2, selector: Point2) -> f64 {
        match (&self.forcing, &self.exact) {
            (Forcing::Given(f), _) => f.eval(p, selector),
            (Forcing::Manufactured, Some(lambda)) => {
                let b = self.beta_at(p, selector);
                let g = lambda.gradient(p, selector);
                b[0] * g[0] + b[1] * g[1] - self.c_at(p, selector) * lambda.eval(p, selector)
            }
            (Forcing::Manufactured, None) => 0.0,
        }
    }

    pub fn inflow_at(&self, p: Point2, selector: Point2) -> f64 {
        self.inflow.eval(p, selector)
    }

    pub fn exact_at(&self, p: Point2, selector: Point2) -> Option<f64> {
        self.exact.as_ref().map(|e| e.eval(p, selector))
    }

    pub fn require_exact(&self) -> Result<&ScalarField> {
        self.exact
            .as_ref()
            .ok_or_else(|| Error::MissingExact(self.id.clone()))
    }
}

/// `f` at each point, with regions resolved by `selector`.
pub fn eval_forcing(case: &TestCase, points: &[Point2], selector: Point2) -> Vec<f64> {
    points.iter().map(|&p| case.forcing_at(p, selector)).collect()
}

const CASE_IDS: &[&str] = &[
    "c1_tri_sq",
    "c1_rect_sq",
    "c1_tri_l",
    "c2_tri_l",
    "c2_tri_crack",
    "c2_rot_sq",
    "c3_disc",
    "fig_disc_const",
    "fig_rotation",
    "fig_rotation_f0",
    "fig_piecewise_rotation",
    "fig_piecewise_rotation_f0",
    "fig_lshape",
    "fig_lshape_f0",
    "fig_crack",
    "fig_crack_f0",
];

pub fn case_ids() -> &'static [&'static str] {
    CASE_IDS
}

fn e(text: &str) -> Expr {
    Expr::parse(text).expect("builtin expression")
}

fn uniform(text: &str) -> ScalarField {
    Piecewise::uniform(e(text))
}

fn vector(bx: &str, by: &str) -> [Expr; 2] {
    [e(bx), e(by)]
}

fn rotation_about_center() -> VectorField {
    Piecewise::uniform(vector("0.5 - y", "x - 0.5"))
}

fn figure(
    id: &str,
    description: &str,
    domain: Domain,
    beta: VectorField,
    c: ScalarField,
    f: f64,
    g: ScalarField,
) -> TestCase {
    TestCase {
        id: id.to_string(),
        description: format!("{description}, f={f}"),
        domain,
        element_kind: ElementKind::Triangle,
        beta,
        c,
        exact: None,
        forcing: Forcing::Given(Piecewise::uniform(Expr::constant(f))),
        inflow: g,
    }
}

pub fn builtin_case(id: &str) -> Result<TestCase> {
    use Domain::*;
    use ElementKind::*;
    let (base, f) = match id.strip_suffix("_f0") {
        Some(b) if b.starts_with("fig_") && b != "fig_disc_const" => (b, 0.0),
        _ => (id, 1.0),
    };
    let c1 = |domain, kind, desc: &str| {
        TestCase::manufactured(
            id,
            desc,
            domain,
            kind,
            Piecewise::uniform(vector("1", "1")),
            uniform("1"),
            uniform("cos(x)*cos(y)"),
        )
    };
    let c2 = |domain, desc: &str| {
        TestCase::manufactured(
            id,
            desc,
            domain,
            Triangle,
            rotation_about_center(),
            uniform("0"),
            uniform("exp(x)*cos(y)"),
        )
    };
    let case = match base {
        "c1_tri_sq" => c1(UnitSquare, Triangle, "beta=[1,1], c=1, lambda=cos x cos y; unit square, triangles"),
        "c1_rect_sq" => c1(UnitSquare, Rectangle, "beta=[1,1], c=1, lambda=cos x cos y; unit square, rectangles"),
        "c1_tri_l" => c1(LShape, Triangle, "beta=[1,1], c=1, lambda=cos x cos y; L-shaped domain"),
        "c2_tri_l" => c2(LShape, "beta=[0.5-y, x-0.5], c=0, lambda=exp(x) cos y; L-shaped domain"),
        "c2_tri_crack" => c2(CrackedSquare, "beta=[0.5-y, x-0.5], c=0, lambda=exp(x) cos y; cracked square"),
        "c2_rot_sq" => TestCase::manufactured(
            id,
            "beta=[-y, x], c=x+y, lambda=sin(pi x) cos(pi y); unit square",
            UnitSquare,
            Triangle,
            Piecewise::uniform(vector("-y", "x")),
            uniform("x + y"),
            uniform("sin(pi*x)*cos(pi*y)"),
        ),
        "c3_disc" => TestCase::manufactured(
            id,
            "beta=[1,-1] for y<1-x else [-2,2], c=1, lambda=sin x cos y; unit square",
            UnitSquare,
            Triangle,
            Piecewise::new(
                vec![(HalfPlane::new(1.0, 1.0, 1.0), vector("1", "-1"))],
                vector("-2", "2"),
            ),
            uniform("1"),
            uniform("sin(x)*cos(y)"),
        ),
        "fig_disc_const" => figure(
            id,
            "beta=[1,-1] for y<1-x else [-2,2], c=0, g=1 on x=0 and -1 on x=1",
            UnitSquare,
            Piecewise::new(
                vec![(HalfPlane::new(1.0, 1.0, 1.0), vector("1", "-1"))],
                vector("-2", "2"),
            ),
            uniform("0"),
            0.0,
            Piecewise::new(vec![(HalfPlane::new(1.0, 0.0, 0.5), e("1"))], e("-1")),
        ),
        "fig_rotation" => figure(
            id,
            "beta=[0.5-y, x-0.5], c=1, g=cos 5y",
            UnitSquare,
            rotation_about_center(),
            uniform("1"),
            f,
            uniform("cos(5*y)"),
        ),
        "fig_piecewise_rotation" => figure(
            id,
            "beta=[-y, x] for y<1-x else [1-y, x-1], c=0, g=sin 3x cos 5y",
            UnitSquare,
            Piecewise::new(
                vec![(HalfPlane::new(1.0, 1.0, 1.0), vector("-y", "x"))],
                vector("1 - y", "x - 1"),
            ),
            uniform("0"),
            f,
            uniform("sin(3*x)*cos(5*y)"),
        ),
        "fig_lshape" => figure(
            id,
            "beta=[-1,1] for y<0.5-x else [1,-1], c=1, g=sin(pi x) cos(pi y); L-shaped domain",
            LShape,
            Piecewise::new(
                vec![(HalfPlane::new(1.0, 1.0, 0.5), vector("-1", "1"))],
                vector("1", "-1"),
            ),
            uniform("1"),
            f,
            uniform("sin(pi*x)*cos(pi*y)"),
        ),
        "fig_crack" => figure(
            id,
            "beta=[0.5-y, x-0.5], c=x-y, g=sin x; cracked square",
            CrackedSquare,
            rotation_about_center(),
            uniform("x - y"),
            f,
            uniform("sin(x)"),
        ),
        _ => return Err(Error::UnknownCase(id.to_string())),
    };
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn every_listed_id_builds() {
        for id in case_ids() {
            let case = builtin_case(id).unwrap();
            assert_eq!(case.id, *id);
        }
        assert!(matches!(builtin_case("nope"), Err(Error::UnknownCase(_))));
        assert!(builtin_case("fig_disc_const_f0").is_err());
    }

    #[test]
    fn forcing_hand_values() {
        let c1 = builtin_case("c1_tri_sq").unwrap();
        assert!((c1.forcing_at(p(0.0, 0.0), p(0.0, 0.0)) + 1.0).abs() < 1e-15);
        let c2 = builtin_case("c2_tri_l").unwrap();
        assert!((c2.forcing_at(p(0.0, 0.0), p(0.0, 0.0)) - 0.5).abs() < 1e-15);
        let c3 = builtin_case("c3_disc").unwrap();
        let (x, y) = (0.1f64, 0.1f64);
        let expected = x.cos() * y.cos() + x.sin() * y.sin() - x.sin() * y.cos();
        assert!((c3.forcing_at(p(x, y), p(x, y)) - expected).abs() < 1e-15);
    }

    #[test]
    fn eval_forcing_uses_selector_region() {
        let c3 = builtin_case("c3_disc").unwrap();
        let q = p(0.5, 0.5);
        let below = eval_forcing(&c3, &[q], p(0.2, 0.2))[0];
        let above = eval_forcing(&c3, &[q], p(0.8, 0.8))[0];
        let (s, c) = (0.5f64.sin(), 0.5f64.cos());
        assert!((below - (c * c + s * s - s * c)).abs() < 1e-15);
        assert!((above - (-2.0 * c * c - 2.0 * s * s - s * c)).abs() < 1e-15);
    }

    #[test]
    fn figure_data() {
        let fig = builtin_case("fig_rotation").unwrap();
        assert!(fig.exact.is_none());
        assert_eq!(fig.forcing_at(p(0.3, 0.3), p(0.3, 0.3)), 1.0);
        let fig0 = builtin_case("fig_rotation_f0").unwrap();
        assert_eq!(fig0.forcing_at(p(0.3, 0.3), p(0.3, 0.3)), 0.0);
        assert!((fig.inflow_at(p(0.0, 0.2), p(0.1, 0.2)) - 1f64.cos()).abs() < 1e-15);
        let disc = builtin_case("fig_disc_const").unwrap();
        assert_eq!(disc.inflow_at(p(0.0, 0.5), p(0.05, 0.5)), 1.0);
        assert_eq!(disc.inflow_at(p(1.0, 0.5), p(0.95, 0.5)), -1.0);
    }

    #[test]
    fn field_parsing() {
        let b = VectorField::parse("[1, -1] if y < 1 - x else [-2, 2]").unwrap();
        assert_eq!(b.pieces()[0].0, HalfPlane::new(1.0, 1.0, 1.0));
        assert_eq!(b.eval(p(0.0, 0.0), p(0.1, 0.1)), [1.0, -1.0]);
        assert_eq!(b.eval(p(0.0, 0.0), p(0.9, 0.9)), [-2.0, 2.0]);
        let again = VectorField::parse(&b.to_string()).unwrap();
        assert_eq!(b, again);
        let s = ScalarField::parse("1 if x < 0.5 else -1").unwrap();
        assert_eq!(s.eval(p(0.0, 0.0), p(0.2, 0.0)), 1.0);
        assert_eq!(s.eval(p(0.0, 0.0), p(0.7, 0.0)), -1.0);
        let g = ScalarField::parse("2 if x > 0.5 else 3").unwrap();
        assert_eq!(g.eval(p(0.0, 0.0), p(0.7, 0.0)), 2.0);
        assert!(ScalarField::parse("1 if x*x < 1 else 0").is_err());
        assert!(ScalarField::parse("1 if x < 1").is_err());
        assert!(VectorField::parse("[1, 2, 3]").is_err());
        assert_eq!(ScalarField::parse("  3 ").unwrap().as_constant(), Some(3.0));
    }

    proptest! {
        #[test]
        fn manufactured_consistency(x in 0.01f64..0.99, y in 0.01f64..0.99, which in 0usize..7) {
            let case = builtin_case(case_ids()[which]).unwrap();
            let q = p(x, y);
            prop_assume!(case.beta.distance_to_interface(q) > 1e-3);
            let lambda = case.exact.as_ref().unwrap();
            let h = 1e-6;
            let fdx = (lambda.eval(p(x + h, y), q) - lambda.eval(p(x - h, y), q)) / (2.0 * h);
            let fdy = (lambda.eval(p(x, y + h), q) - lambda.eval(p(x, y - h), q)) / (2.0 * h);
            let b = case.beta_at(q, q);
            let fd = b[0] * fdx + b[1] * fdy - case.c_at(q, q) * lambda.eval(q, q);
            prop_assert!((case.forcing_at(q, q) - fd).abs() < 1e-6);
            // boundary data equals the exact solution
            prop_assert!((case.inflow_at(q, q) - lambda.eval(q, q)).abs() < 1e-12);
        }
    }
}
