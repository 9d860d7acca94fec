//! Scaled monomial bases and local mass matrices.
//!
//! On an element with centroid `x_T` and diameter `h_T` the basis of `P_k(T)`
//! is `((x − x_T)/h_T)^a ((y − y_T)/h_T)^b` with `a + b ≤ k`, ordered by total
//! degree and then by decreasing power of x. The first `dim(k − 1)`
//! functions therefore span `P_{k−1}(T)`. Edge polynomials use powers of the
//! edge parameter `s ∈ [−1, 1]`.

pub mod quadrature;

pub use quadrature::{edge_quadrature, element_quadrature, EdgeRule, QuadratureRule};

use crate::mesh::{Element, Point2};

/// Dimension of `P_k` in two variables.
pub const fn dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponent pairs `(a, b)` of the degree-`k` basis in basis order.
pub fn monomial_exponents(k: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(dim(k));
    for total in 0..=k as u32 {
        for b in 0..=total {
            out.push((total - b, b));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ElementBasis {
    pub degree: usize,
    pub center: Point2,
    pub h: f64,
    exponents: Vec<(u32, u32)>,
}

impl ElementBasis {
    pub fn new(element: &Element, degree: usize) -> Self {
        Self {
            degree,
            center: element.centroid,
            h: element.diameter,
            exponents: monomial_exponents(degree),
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn scaled(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.center.x) / self.h, (p.y - self.center.y) / self.h)
    }

    pub fn eval(&self, p: Point2) -> Vec<f64> {
        let (u, v) = self.scaled(p);
        self.exponents
            .iter()
            .map(|&(a, b)| u.powi(a as i32) * v.powi(b as i32))
            .collect()
    }

    /// Gradients `[∂x φ_i, ∂y φ_i]`.
    pub fn grad(&self, p: Point2) -> Vec<[f64; 2]> {
        let (u, v) = self.scaled(p);
        let pow = |t: f64, n: u32| if n == 0 { 0.0 } else { n as f64 * t.powi(n as i32 - 1) };
        self.exponents
            .iter()
            .map(|&(a, b)| {
                [
                    pow(u, a) * v.powi(b as i32) / self.h,
                    u.powi(a as i32) * pow(v, b) / self.h,
                ]
            })
            .collect()
    }

    /// Value of `Σ c_i φ_i` at `p`.
    pub fn combine(&self, coeffs: &[f64], p: Point2) -> f64 {
        self.eval(p).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

/// `s^j`, `j = 0..=degree`, on an edge parameterised by `s ∈ [−1, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut t = 1.0;
        for _ in 0..=self.degree {
            out.push(t);
            t *= s;
        }
        out
    }

    pub fn combine(&self, coeffs: &[f64], s: f64) -> f64 {
        self.eval(s).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

/// Dense row-major mass matrix `∫ φ_i φ_j` of the first `n` element basis
/// functions.
pub fn element_mass(basis: &ElementBasis, n: usize, rule: &QuadratureRule) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = basis.eval(p);
        for i in 0..n {
            for j in 0..=i {
                m[i * n + j] += w * phi[i] * phi[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[j * n + i] = m[i * n + j];
        }
    }
    m
}

/// Dense row-major edge mass matrix `∫_e s^i s^j ds`.
pub fn edge_mass(basis: EdgeBasis, rule: &EdgeRule) -> Vec<f64> {
    let n = basis.len();
    let mut m = vec![0.0; n * n];
    for (&s, &w) in rule.params.iter().zip(&rule.weights) {
        let phi = basis.eval(s);
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] += w * phi[i] * phi[j];
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Domain, ElementKind, Mesh};
    use faer::Mat;

    #[test]
    fn exponent_order() {
        assert_eq!(monomial_exponents(0), [(0, 0)]);
        assert_eq!(
            monomial_exponents(2),
            [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        for k in 0..5 {
            assert_eq!(monomial_exponents(k).len(), dim(k));
            assert_eq!(monomial_exponents(k + 1)[..dim(k)], monomial_exponents(k)[..]);
        }
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let m = Mesh::at_level(Domain::UnitSquare, ElementKind::Triangle, 1).unwrap();
        let b = ElementBasis::new(&m.elements[3], 3);
        let p = Point2::new(0.31, 0.22);
        let g = b.grad(p);
        let d = 1e-6;
        let px = b.eval(Point2::new(p.x + d, p.y));
        let mx = b.eval(Point2::new(p.x - d, p.y));
        let py = b.eval(Point2::new(p.x, p.y + d));
        let my = b.eval(Point2::new(p.x, p.y - d));
        for i in 0..b.len() {
            assert!((g[i][0] - (px[i] - mx[i]) / (2.0 * d)).abs() < 1e-7);
            assert!((g[i][1] - (py[i] - my[i]) / (2.0 * d)).abs() < 1e-7);
        }
    }

    fn condition(m: &[f64], n: usize) -> f64 {
        let a = Mat::from_fn(n, n, |i, j| m[i * n + j]);
        let s = a.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        s[n - 1] / s[0]
    }

    #[test]
    fn mass_conditioning_is_mesh_independent() {
        for kind in [ElementKind::Triangle, ElementKind::Rectangle] {
            for k in [1, 2] {
                let mut conds = Vec::new();
                for level in [0, 2, 4] {
                    let m = Mesh::at_level(Domain::UnitSquare, kind, level).unwrap();
                    let el = &m.elements[m.elements.len() / 2];
                    let rule = element_quadrature(el, 2 * k).unwrap();
                    let b = ElementBasis::new(el, k);
                    conds.push(condition(&element_mass(&b, dim(k), &rule), dim(k)));
                }
                let (lo, hi) = conds
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
                assert!(hi / lo < 2.0, "{kind} k={k}: {conds:?}");
            }
        }
    }

    #[test]
    fn edge_mass_entries() {
        let m = Mesh::at_level(Domain::UnitSquare, ElementKind::Triangle, 0).unwrap();
        let e = &m.edges[0];
        let rule = edge_quadrature(e, 4).unwrap();
        let mm = edge_mass(EdgeBasis::new(2), &rule);
        let half = 0.5 * e.length;
        // ∫_{−1}^{1} s^{i+j} ds = 2/(i+j+1) for even i+j
        let exact = |i: usize, j: usize| {
            if (i + j) % 2 == 1 {
                0.0
            } else {
                half * 2.0 / (i + j + 1) as f64
            }
        };
        for i in 0..3 {
            for j in 0..3 {
                assert!((mm[i * 3 + j] - exact(i, j)).abs() < 1e-15);
            }
        }
    }
}
