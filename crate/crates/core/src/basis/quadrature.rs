//! Gauss-type quadrature on edges, triangles and parallelograms.
//!
//! Reference rules are built on demand for each requested exactness degree
//! and cached for the lifetime of the process.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::mesh::{Edge, Element, ElementKind, Point2};
use crate::{Error, Result};

/// Highest polynomial degree any rule is built for.
pub const MAX_DEGREE: usize = 41;

/// Physical-space rule: `∫ f ≈ Σ w_q f(x_q)`.
#[derive(Clone, Debug, Default)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point2) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Rule on a mesh edge; `params[q] ∈ [−1, 1]` is the edge parameter of
/// `points[q]`.
#[derive(Clone, Debug, Default)]
pub struct EdgeRule {
    pub params: Vec<f64>,
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl EdgeRule {
    pub fn integrate(&self, f: impl Fn(Point2) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Reference rule: points in the reference cell and weights summing to its
/// measure.
#[derive(Debug)]
struct ReferenceRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree {
            requested: degree,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// `n`-point Gauss-Legendre nodes and weights on [−1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

type Cache = Mutex<HashMap<(u8, usize), Arc<ReferenceRule>>>;

fn cached(shape: u8, degree: usize, build: fn(usize) -> ReferenceRule) -> Result<Arc<ReferenceRule>> {
    check_degree(degree)?;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    Ok(map
        .entry((shape, degree))
        .or_insert_with(|| Arc::new(build(degree)))
        .clone())
}

/// Symmetrised collapsed-coordinate rule on the triangle (0,0), (1,0), (0,1).
fn build_triangle(degree: usize) -> ReferenceRule {
    let n = (degree + 2).div_ceil(2).max(1);
    let (g, w) = gauss_legendre(n);
    let mut base = Vec::with_capacity(n * n);
    for i in 0..n {
        let xi = 0.5 * (g[i] + 1.0);
        for j in 0..n {
            let eta = 0.5 * (g[j] + 1.0);
            let weight = 0.25 * w[i] * w[j] * (1.0 - xi);
            base.push(([xi, eta * (1.0 - xi)], weight));
        }
    }
    // average over the six permutations of the barycentric coordinates
    let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut points = Vec::with_capacity(6 * base.len());
    let mut weights = Vec::with_capacity(6 * base.len());
    for perm in perms {
        for &([x, y], wt) in &base {
            let bary = [1.0 - x - y, x, y];
            points.push([bary[perm[1]], bary[perm[2]]]);
            weights.push(wt / 6.0);
        }
    }
    ReferenceRule { points, weights }
}

/// Tensor Gauss rule on [0, 1]².
fn build_square(degree: usize) -> ReferenceRule {
    let n = (degree + 1).div_ceil(2).max(1);
    let (g, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push([0.5 * (g[i] + 1.0), 0.5 * (g[j] + 1.0)]);
            weights.push(0.25 * w[i] * w[j]);
        }
    }
    ReferenceRule { points, weights }
}

/// Gauss rule on [−1, 1] stored with a zero second coordinate.
fn build_line(degree: usize) -> ReferenceRule {
    let n = (degree + 1).div_ceil(2).max(1);
    let (g, w) = gauss_legendre(n);
    ReferenceRule {
        points: g.into_iter().map(|s| [s, 0.0]).collect(),
        weights: w,
    }
}

/// Rule exact for polynomials of total degree `degree` on `element`.
///
/// Rectangles are mapped affinely from their first three vertices, which is
/// exact for parallelograms.
pub fn element_quadrature(element: &Element, degree: usize) -> Result<QuadratureRule> {
    let rule = match element.kind {
        ElementKind::Triangle => cached(0, degree, build_triangle)?,
        ElementKind::Rectangle => cached(1, degree, build_square)?,
    };
    let v = &element.coords;
    let o = v[0];
    let (e1, e2) = match element.kind {
        ElementKind::Triangle => (v[1], v[2]),
        ElementKind::Rectangle => (v[1], v[3]),
    };
    let a = [e1.x - o.x, e1.y - o.y];
    let b = [e2.x - o.x, e2.y - o.y];
    let jac = (a[0] * b[1] - a[1] * b[0]).abs();
    let points = rule
        .points
        .iter()
        .map(|&[s, t]| Point2::new(o.x + s * a[0] + t * b[0], o.y + s * a[1] + t * b[1]))
        .collect();
    let weights = rule.weights.iter().map(|w| w * jac).collect();
    Ok(QuadratureRule { points, weights })
}

/// Gauss rule exact for polynomials of degree `degree` along `edge`.
pub fn edge_quadrature(edge: &Edge, degree: usize) -> Result<EdgeRule> {
    let rule = cached(2, degree, build_line)?;
    let params: Vec<f64> = rule.points.iter().map(|p| p[0]).collect();
    let points = params.iter().map(|&s| edge.point_at(s)).collect();
    let weights = rule.weights.iter().map(|w| w * 0.5 * edge.length).collect();
    Ok(EdgeRule {
        params,
        points,
        weights,
    })
}
