//! L² projections and the discrete weak gradient.
//!
//! A local weak function on element `T` is stored as the coefficients of
//! `λ0` in the scaled monomial basis of `P_k(T)` followed, edge by edge in
//! local order, by the coefficients of `λb` in the edge basis of `P_k(e)`.
//! Its weak gradient `∇_w λ ∈ [P_r(T)]²` solves
//!
//! ```text
//!   (∇_w λ, ψ)_T = −(λ0, ∇·ψ)_T + ⟨λb, ψ·n⟩_∂T   for all ψ ∈ [P_r(T)]².
//! ```

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::basis::{dim, edge_mass, edge_quadrature, element_mass, element_quadrature};
use crate::basis::{EdgeBasis, EdgeRule, ElementBasis, QuadratureRule};
use crate::mesh::{Edge, Element, Mesh, Point2};
use crate::{Error, Result};

/// Solves `M X = B` in place for a dense row-major SPD `M` (`n × n`) and
/// row-major `B` (`n × ncols`).
pub(crate) fn spd_solve(m: &[f64], n: usize, b: &mut [f64], ncols: usize, what: &str) -> Result<()> {
    let a = Mat::from_fn(n, n, |i, j| m[i * n + j]);
    let llt = a
        .llt(Side::Lower)
        .map_err(|_| Error::SingularMass(what.to_string()))?;
    let mut rhs = Mat::from_fn(n, ncols, |i, j| b[i * ncols + j]);
    llt.solve_in_place(rhs.as_mut());
    for i in 0..n {
        for j in 0..ncols {
            b[i * ncols + j] = rhs[(i, j)];
        }
    }
    Ok(())
}

/// Quadrature, basis and edge data of one element, shared by the weak
/// gradient, local assembly and error evaluation.
#[derive(Clone, Debug)]
pub struct ElementContext<'m> {
    pub mesh: &'m Mesh,
    pub elem: usize,
    pub k: usize,
    pub basis: ElementBasis,
    pub rule: QuadratureRule,
    pub edge_rules: Vec<EdgeRule>,
}

impl<'m> ElementContext<'m> {
    pub fn new(mesh: &'m Mesh, elem: usize, k: usize, degree: usize) -> Result<Self> {
        let el = &mesh.elements[elem];
        let edge_rules = el
            .edges
            .iter()
            .map(|u| edge_quadrature(&mesh.edges[u.edge], degree))
            .collect::<Result<_>>()?;
        Ok(Self {
            mesh,
            elem,
            k,
            basis: ElementBasis::new(el, k),
            rule: element_quadrature(el, degree)?,
            edge_rules,
        })
    }

    pub fn element(&self) -> &'m Element {
        &self.mesh.elements[self.elem]
    }

    pub fn edge(&self, local: usize) -> &'m Edge {
        &self.mesh.edges[self.element().edges[local].edge]
    }

    /// Number of interior coefficients, `dim P_k`.
    pub fn n0(&self) -> usize {
        dim(self.k)
    }

    /// Number of multiplier coefficients, `dim P_{k−1}`.
    pub fn nu(&self) -> usize {
        dim(self.k - 1)
    }

    /// Coefficients per edge, `k + 1`.
    pub fn nb(&self) -> usize {
        self.k + 1
    }

    pub fn n_edges(&self) -> usize {
        self.element().edges.len()
    }

    /// Size of a local weak function.
    pub fn nloc(&self) -> usize {
        self.n0() + self.n_edges() * self.nb()
    }

    /// Offset of edge `local` within a local weak function.
    pub fn edge_offset(&self, local: usize) -> usize {
        self.n0() + local * self.nb()
    }

    /// Row-major mass matrix of the first `n` basis functions.
    pub fn mass(&self, n: usize) -> Vec<f64> {
        element_mass(&self.basis, n, &self.rule)
    }

    /// Local `Q_h w`: interior projection followed by each edge projection.
    pub fn project_weak(&self, w: impl Fn(Point2) -> f64) -> Result<Vec<f64>> {
        let mut out = project_with(&self.basis, self.n0(), &self.rule, &w)?;
        for rule in &self.edge_rules {
            out.extend(project_edge_with(EdgeBasis::new(self.k), rule, &w)?);
        }
        Ok(out)
    }
}

fn project_with(
    basis: &ElementBasis,
    n: usize,
    rule: &QuadratureRule,
    f: &dyn Fn(Point2) -> f64,
) -> Result<Vec<f64>> {
    let mut rhs = vec![0.0; n];
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let fp = w * f(p);
        for (r, phi) in rhs.iter_mut().zip(basis.eval(p)) {
            *r += fp * phi;
        }
    }
    spd_solve(&element_mass(basis, n, rule), n, &mut rhs, 1, "element")?;
    Ok(rhs)
}

fn project_edge_with(basis: EdgeBasis, rule: &EdgeRule, f: &dyn Fn(Point2) -> f64) -> Result<Vec<f64>> {
    let n = basis.len();
    let mut rhs = vec![0.0; n];
    for ((&s, &p), &w) in rule.params.iter().zip(&rule.points).zip(&rule.weights) {
        let fp = w * f(p);
        for (r, phi) in rhs.iter_mut().zip(basis.eval(s)) {
            *r += fp * phi;
        }
    }
    spd_solve(&edge_mass(basis, rule), n, &mut rhs, 1, "edge")?;
    Ok(rhs)
}

/// Coefficients of the L² projection of `f` onto `P_k(element)`.
pub fn l2_project_element(
    element: &Element,
    k: usize,
    f: impl Fn(Point2) -> f64,
    degree: usize,
) -> Result<Vec<f64>> {
    let rule = element_quadrature(element, degree)?;
    project_with(&ElementBasis::new(element, k), dim(k), &rule, &f)
}

/// Coefficients of the L² projection of `f` onto `P_k(edge)`.
pub fn l2_project_edge(edge: &Edge, k: usize, f: impl Fn(Point2) -> f64, degree: usize) -> Result<Vec<f64>> {
    let rule = edge_quadrature(edge, degree)?;
    project_edge_with(EdgeBasis::new(k), &rule, &f)
}

/// Matrix of the weak gradient on one element: row `j` of `gx`/`gy` holds
/// the `j`-th `P_r` coefficient of each component, column `i` the local
/// weak degree of freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakGradientTable {
    pub nr: usize,
    pub nloc: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl WeakGradientTable {
    /// Weak gradient into `[P_r(T)]²`.
    pub fn build(ctx: &ElementContext<'_>, r: usize) -> Result<Self> {
        let nr = dim(r);
        let (n0, nloc) = (ctx.n0(), ctx.nloc());
        let mut gx = vec![0.0; nr * nloc];
        let mut gy = vec![0.0; nr * nloc];
        // −(φ_i, ∂ψ_j)_T
        for (&p, &w) in ctx.rule.points.iter().zip(&ctx.rule.weights) {
            let phi = ctx.basis.eval(p);
            let dpsi = ctx.basis.grad(p);
            for j in 0..nr {
                for i in 0..n0 {
                    gx[j * nloc + i] -= w * phi[i] * dpsi[j][0];
                    gy[j * nloc + i] -= w * phi[i] * dpsi[j][1];
                }
            }
        }
        // ⟨s^m, ψ_j n⟩_e
        let eb = EdgeBasis::new(ctx.k);
        for (le, rule) in ctx.edge_rules.iter().enumerate() {
            let n = ctx.mesh.outward_normal(ctx.elem, le);
            let off = ctx.edge_offset(le);
            for ((&s, &p), &w) in rule.params.iter().zip(&rule.points).zip(&rule.weights) {
                let psi = ctx.basis.eval(p);
                let sm = eb.eval(s);
                for j in 0..nr {
                    for (m, &sv) in sm.iter().enumerate() {
                        gx[j * nloc + off + m] += w * sv * psi[j] * n[0];
                        gy[j * nloc + off + m] += w * sv * psi[j] * n[1];
                    }
                }
            }
        }
        let mass = ctx.mass(nr);
        spd_solve(&mass, nr, &mut gx, nloc, "weak gradient")?;
        spd_solve(&mass, nr, &mut gy, nloc, "weak gradient")?;
        Ok(Self { nr, nloc, gx, gy })
    }

    /// `P_r` coefficients of both components of `∇_w v`.
    pub fn apply(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let row = |g: &[f64], j: usize| -> f64 {
            g[j * self.nloc..(j + 1) * self.nloc]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum()
        };
        (
            (0..self.nr).map(|j| row(&self.gx, j)).collect(),
            (0..self.nr).map(|j| row(&self.gy, j)).collect(),
        )
    }
}

/// Weak gradient into `[P_{k−1}(T)]²` with the default quadrature degree.
pub fn weak_gradient_operator(mesh: &Mesh, elem: usize, k: usize) -> Result<WeakGradientTable> {
    let ctx = ElementContext::new(mesh, elem, k, 2 * k + 4)?;
    WeakGradientTable::build(&ctx, k - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Domain, ElementKind};
    use proptest::prelude::*;

    fn unit_triangle() -> Mesh {
        Mesh::from_cells(
            Domain::UnitSquare,
            ElementKind::Triangle,
            0,
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![vec![0, 1, 2]],
        )
    }

    fn gradient_of(mesh: &Mesh, k: usize, r: usize, v0: impl Fn(Point2) -> f64, vb: impl Fn(Point2) -> f64) -> [f64; 2] {
        let ctx = ElementContext::new(mesh, 0, k, 12).unwrap();
        let mut local = project_with(&ctx.basis, ctx.n0(), &ctx.rule, &v0).unwrap();
        for rule in &ctx.edge_rules {
            local.extend(project_edge_with(EdgeBasis::new(k), rule, &vb).unwrap());
        }
        let table = WeakGradientTable::build(&ctx, r).unwrap();
        let (gx, gy) = table.apply(&local);
        [gx[0], gy[0]]
    }

    #[test]
    fn unit_cases() {
        let m = unit_triangle();
        let g = gradient_of(&m, 1, 0, |p| p.x, |p| p.x);
        assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        let g = gradient_of(&m, 1, 0, |_| 1.0, |_| 0.0);
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        let g = gradient_of(&m, 2, 0, |p| p.x * p.x, |p| p.x * p.x);
        assert!((g[0] - 2.0 / 3.0).abs() < 1e-12 && g[1].abs() < 1e-12);
    }

    #[test]
    fn default_operator_shape() {
        let m = Mesh::at_level(Domain::UnitSquare, ElementKind::Rectangle, 0).unwrap();
        let t = weak_gradient_operator(&m, 0, 2).unwrap();
        assert_eq!((t.nr, t.nloc), (3, 6 + 4 * 3));
    }

    #[test]
    fn projection_oracles() {
        let m = Mesh::at_level(Domain::UnitSquare, ElementKind::Triangle, 1).unwrap();
        let el = &m.elements[2];
        // independent least-squares oracle: normal equations assembled
        // directly from sampled monomials
        let k = 2;
        let coeffs = l2_project_element(el, k, |p| p.x.sin(), 20).unwrap();
        let rule = element_quadrature(el, 20).unwrap();
        let b = ElementBasis::new(el, k);
        for i in 0..dim(k) {
            // residual is orthogonal to every basis function
            let r = rule.integrate(|p| (p.x.sin() - b.combine(&coeffs, p)) * b.eval(p)[i]);
            assert!(r.abs() < 1e-10, "moment {i}: {r}");
        }
        let e = &m.edges[3];
        let c = l2_project_edge(e, 2, |p| (5.0 * p.y).cos(), 20).unwrap();
        let rule = edge_quadrature(e, 20).unwrap();
        let eb = EdgeBasis::new(2);
        for j in 0..3 {
            let r: f64 = rule
                .params
                .iter()
                .zip(&rule.points)
                .zip(&rule.weights)
                .map(|((&s, &p), &w)| w * ((5.0 * p.y).cos() - eb.combine(&c, s)) * eb.eval(s)[j])
                .sum();
            assert!(r.abs() < 1e-10);
        }
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let m = Mesh::at_level(Domain::LShape, ElementKind::Triangle, 1).unwrap();
        let el = &m.elements[5];
        let f = |p: Point2| 1.0 + 2.0 * p.x - p.y + 0.5 * p.x * p.y;
        let c = l2_project_element(el, 2, f, 8).unwrap();
        let b = ElementBasis::new(el, 2);
        for p in &el.coords {
            assert!((b.combine(&c, *p) - f(*p)).abs() < 1e-12);
        }
    }

    fn random_triangle(pts: [(f64, f64); 3]) -> Option<Mesh> {
        let p: Vec<Point2> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let cross = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[1].y - p[0].y) * (p[2].x - p[0].x);
        if cross.abs() < 1e-2 {
            return None;
        }
        let cells = if cross > 0.0 { vec![vec![0, 1, 2]] } else { vec![vec![0, 2, 1]] };
        Some(Mesh::from_cells(Domain::UnitSquare, ElementKind::Triangle, 0, p, cells))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn weak_gradient_commutes_with_projection(
            a in (-1.0f64..2.0, -1.0f64..2.0),
            b in (-1.0f64..2.0, -1.0f64..2.0),
            c in (-1.0f64..2.0, -1.0f64..2.0),
            k in 1usize..=2,
        ) {
            let Some(mesh) = random_triangle([a, b, c]) else { return Ok(()); };
            let w = |p: Point2| p.x.sin() * p.y.cos();
            let ctx = ElementContext::new(&mesh, 0, k, 20).unwrap();
            let local = ctx.project_weak(w).unwrap();
            let table = WeakGradientTable::build(&ctx, k - 1).unwrap();
            let (gx, gy) = table.apply(&local);
            let el = &mesh.elements[0];
            let qx = l2_project_element(el, k - 1, |p| p.x.cos() * p.y.cos(), 20).unwrap();
            let qy = l2_project_element(el, k - 1, |p| -p.x.sin() * p.y.sin(), 20).unwrap();
            let scale = qx.iter().chain(&qy).fold(1e-3f64, |m, v| m.max(v.abs()));
            for j in 0..gx.len() {
                prop_assert!((gx[j] - qx[j]).abs() <= 1e-10 * scale);
                prop_assert!((gy[j] - qy[j]).abs() <= 1e-10 * scale);
            }
        }
    }
}
