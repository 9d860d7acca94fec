//! Benchmark domains as conforming triangle or rectangle meshes.
//!
//! Three domains are supported: the unit square, the L-shaped domain with
//! corners (0,0), (1,0), (1,0.5), (0.5,0.5), (0.5,1), (0,1), and the unit
//! square cut by the slit (0.5,1)×{0.5}. Coarse triangulations split every
//! 0.5×0.5 (or 1×1) square along its slope −1 diagonal; the rectangular
//! family starts from a 3×2 grid of the unit square.
//!
//! The slit is represented by duplicating every vertex on it except the tip
//! (0.5,0.5). Elements above and below the slit therefore never share an
//! edge there, and each lip becomes a one-sided edge tagged
//! [`EdgeTag::CrackLower`] or [`EdgeTag::CrackUpper`].

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::cases::VectorField;
use crate::{Error, Result};

/// Dead band on β·n below which an edge is treated as characteristic.
pub const INFLOW_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    UnitSquare,
    LShape,
    CrackedSquare,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit_square",
            Domain::LShape => "l_shape",
            Domain::CrackedSquare => "cracked_square",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "unit_square" | "square" => Ok(Domain::UnitSquare),
            "l_shape" | "lshape" => Ok(Domain::LShape),
            "cracked_square" | "crack" => Ok(Domain::CrackedSquare),
            _ => Err(format!("unknown domain `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Triangle,
    Rectangle,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Triangle => "tri",
            ElementKind::Rectangle => "rect",
        }
    }

    pub fn n_vertices(self) -> usize {
        match self {
            ElementKind::Triangle => 3,
            ElementKind::Rectangle => 4,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ElementKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "tri" | "triangle" => Ok(ElementKind::Triangle),
            "rect" | "rectangle" => Ok(ElementKind::Rectangle),
            _ => Err(format!("unknown element kind `{s}` (expected tri or rect)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeTag {
    Interior,
    Boundary,
    CrackUpper,
    CrackLower,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Interior => "interior",
            EdgeTag::Boundary => "boundary",
            EdgeTag::CrackUpper => "crack_upper",
            EdgeTag::CrackLower => "crack_lower",
        }
    }
}

/// An element's view of one of its edges.
#[derive(Clone, Copy, Debug)]
pub struct EdgeUse {
    pub edge: usize,
    /// +1 when the element is the edge's left element (edge normal is
    /// outward), −1 otherwise.
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct Element {
    pub kind: ElementKind,
    /// Counter-clockwise vertex ids.
    pub vertices: Vec<usize>,
    pub coords: Vec<Point2>,
    /// Local edge `i` joins local vertices `i` and `i + 1`.
    pub edges: Vec<EdgeUse>,
    pub centroid: Point2,
    /// Longest vertex-to-vertex distance.
    pub diameter: f64,
    pub area: f64,
}

impl Element {
    fn new(kind: ElementKind, vertices: Vec<usize>, points: &[Point2]) -> Self {
        let coords: Vec<Point2> = vertices.iter().map(|&v| points[v]).collect();
        let n = coords.len();
        let mut twice_area = 0.0;
        for i in 0..n {
            let (a, b) = (coords[i], coords[(i + 1) % n]);
            twice_area += a.x * b.y - b.x * a.y;
        }
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diameter = diameter.max(coords[i].dist(coords[j]));
            }
        }
        // vertex average is the centroid for triangles and rectangles
        let centroid = Point2::new(
            coords.iter().map(|p| p.x).sum::<f64>() / n as f64,
            coords.iter().map(|p| p.y).sum::<f64>() / n as f64,
        );
        Self {
            kind,
            vertices,
            coords,
            edges: Vec::new(),
            centroid,
            diameter,
            area: 0.5 * twice_area,
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.coords {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub endpoints: [usize; 2],
    pub coords: [Point2; 2],
    pub length: f64,
    pub left: usize,
    pub right: Option<usize>,
    pub tag: EdgeTag,
    /// Unit normal pointing out of `left`.
    pub normal: [f64; 2],
}

impl Edge {
    pub fn midpoint(&self) -> Point2 {
        self.coords[0].midpoint(self.coords[1])
    }

    /// Point at parameter `s ∈ [−1, 1]`, running from `endpoints[0]` to
    /// `endpoints[1]`.
    pub fn point_at(&self, s: f64) -> Point2 {
        let [a, b] = self.coords;
        let t = 0.5 * (s + 1.0);
        Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }

    /// True for edges on ∂Ω, including both crack lips.
    pub fn is_exterior(&self) -> bool {
        self.tag != EdgeTag::Interior
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub points: Vec<Point2>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    pub level: u32,
    pub domain: Domain,
    pub kind: ElementKind,
}

/// Row of the convergence tables: `(1/h label, #elements, #edges, max h_T)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStats {
    pub inv_h_label: u64,
    pub n_elements: usize,
    pub n_edges: usize,
    pub max_diameter: f64,
}

/// Γ₋ edges with β·n sampled at each edge midpoint.
#[derive(Clone, Debug, Default)]
pub struct InflowSet {
    pub edges: Vec<(usize, f64)>,
}

impl InflowSet {
    pub fn contains(&self, edge: usize) -> bool {
        self.edges.binary_search_by_key(&edge, |&(e, _)| e).is_ok()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().map(|&(e, _)| e)
    }
}

fn quadrant_triangles(ll: usize, lr: usize, ur: usize, ul: usize) -> [Vec<usize>; 2] {
    // split along the slope −1 diagonal lr–ul
    [vec![ll, lr, ul], vec![lr, ur, ul]]
}

pub fn build_coarse(domain: Domain, kind: ElementKind) -> Result<Mesh> {
    let p = Point2::new;
    let (points, cells): (Vec<Point2>, Vec<Vec<usize>>) = match (domain, kind) {
        (Domain::UnitSquare, ElementKind::Triangle) => {
            let pts = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
            (pts, quadrant_triangles(0, 1, 2, 3).to_vec())
        }
        (Domain::UnitSquare, ElementKind::Rectangle) => {
            let mut pts = Vec::new();
            for j in 0..3 {
                for i in 0..4 {
                    pts.push(p(i as f64 / 3.0, j as f64 / 2.0));
                }
            }
            let id = |i: usize, j: usize| i + 4 * j;
            let mut cells = Vec::new();
            for j in 0..2 {
                for i in 0..3 {
                    cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            (pts, cells)
        }
        (Domain::LShape, ElementKind::Triangle) => {
            // 3×3 grid without (1,1)
            let pts = vec![
                p(0.0, 0.0),
                p(0.5, 0.0),
                p(1.0, 0.0),
                p(0.0, 0.5),
                p(0.5, 0.5),
                p(1.0, 0.5),
                p(0.0, 1.0),
                p(0.5, 1.0),
            ];
            let mut cells = Vec::new();
            cells.extend(quadrant_triangles(0, 1, 4, 3));
            cells.extend(quadrant_triangles(1, 2, 5, 4));
            cells.extend(quadrant_triangles(3, 4, 7, 6));
            (pts, cells)
        }
        (Domain::CrackedSquare, ElementKind::Triangle) => {
            // 3×3 grid plus a second copy of (1,0.5) for the upper lip
            let mut pts = Vec::new();
            for j in 0..3 {
                for i in 0..3 {
                    pts.push(p(0.5 * i as f64, 0.5 * j as f64));
                }
            }
            pts.push(p(1.0, 0.5));
            let upper_end = 9;
            let mut cells = Vec::new();
            cells.extend(quadrant_triangles(0, 1, 4, 3));
            cells.extend(quadrant_triangles(1, 2, 5, 4));
            cells.extend(quadrant_triangles(3, 4, 7, 6));
            cells.extend(quadrant_triangles(4, upper_end, 8, 7));
            (pts, cells)
        }
        (d, k) => {
            return Err(Error::UnsupportedMesh {
                domain: d.to_string(),
                kind: k.to_string(),
            })
        }
    };
    Ok(Mesh::from_cells(domain, kind, 0, points, cells))
}

fn on_slit(p: Point2) -> bool {
    (p.y - 0.5).abs() < 1e-12 && p.x > 0.5 + 1e-12 && p.x < 1.0 + 1e-12
}

impl Mesh {
    /// Builds elements and edge connectivity from counter-clockwise cells.
    pub fn from_cells(
        domain: Domain,
        kind: ElementKind,
        level: u32,
        points: Vec<Point2>,
        cells: Vec<Vec<usize>>,
    ) -> Mesh {
        let mut elements: Vec<Element> = cells
            .into_iter()
            .map(|c| Element::new(kind, c, &points))
            .collect();
        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, el) in elements.iter_mut().enumerate() {
            let n = el.vertices.len();
            for i in 0..n {
                let (a, b) = (el.vertices[i], el.vertices[(i + 1) % n]);
                let key = (a.min(b), a.max(b));
                let use_ = match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        assert!(edge.right.is_none(), "edge {a}-{b} shared by three elements");
                        edge.right = Some(t);
                        EdgeUse { edge: e, sign: -1.0 }
                    }
                    None => {
                        let (pa, pb) = (points[a], points[b]);
                        let length = pa.dist(pb);
                        let normal = [(pb.y - pa.y) / length, -(pb.x - pa.x) / length];
                        lookup.insert(key, edges.len());
                        edges.push(Edge {
                            endpoints: [a, b],
                            coords: [pa, pb],
                            length,
                            left: t,
                            right: None,
                            tag: EdgeTag::Interior,
                            normal,
                        });
                        EdgeUse {
                            edge: edges.len() - 1,
                            sign: 1.0,
                        }
                    }
                };
                el.edges.push(use_);
            }
        }
        for edge in &mut edges {
            if edge.right.is_some() {
                continue;
            }
            let mid = edge.midpoint();
            edge.tag = if domain == Domain::CrackedSquare && on_slit(mid) {
                if elements[edge.left].centroid.y < 0.5 {
                    EdgeTag::CrackLower
                } else {
                    EdgeTag::CrackUpper
                }
            } else {
                EdgeTag::Boundary
            };
        }
        Mesh {
            points,
            elements,
            edges,
            level,
            domain,
            kind,
        }
    }

    /// Uniform refinement: every element is replaced by four congruent
    /// children through its edge midpoints.
    pub fn refine(&self) -> Mesh {
        let mut points = self.points.clone();
        // one midpoint per edge id; crack lips are distinct edges, so their
        // midpoints are duplicated automatically
        let mids: Vec<usize> = self
            .edges
            .iter()
            .map(|e| {
                points.push(e.midpoint());
                points.len() - 1
            })
            .collect();
        let mut cells = Vec::with_capacity(4 * self.elements.len());
        for el in &self.elements {
            let v = &el.vertices;
            let m: Vec<usize> = el.edges.iter().map(|u| mids[u.edge]).collect();
            match self.kind {
                ElementKind::Triangle => {
                    cells.push(vec![v[0], m[0], m[2]]);
                    cells.push(vec![m[0], v[1], m[1]]);
                    cells.push(vec![m[2], m[1], v[2]]);
                    cells.push(vec![m[0], m[1], m[2]]);
                }
                ElementKind::Rectangle => {
                    points.push(el.centroid);
                    let c = points.len() - 1;
                    cells.push(vec![v[0], m[0], c, m[3]]);
                    cells.push(vec![m[0], v[1], m[1], c]);
                    cells.push(vec![c, m[1], v[2], m[2]]);
                    cells.push(vec![m[3], c, m[2], v[3]]);
                }
            }
        }
        Mesh::from_cells(self.domain, self.kind, self.level + 1, points, cells)
    }

    /// The mesh after `levels` refinements of the coarse mesh.
    pub fn at_level(domain: Domain, kind: ElementKind, levels: u32) -> Result<Mesh> {
        let mut mesh = build_coarse(domain, kind)?;
        for _ in 0..levels {
            mesh = mesh.refine();
        }
        Ok(mesh)
    }

    pub fn stats(&self) -> MeshStats {
        MeshStats {
            inv_h_label: 1u64 << self.level,
            n_elements: self.elements.len(),
            n_edges: self.edges.len(),
            max_diameter: self
                .elements
                .iter()
                .map(|e| e.diameter)
                .fold(0.0, f64::max),
        }
    }

    /// Unit normal of `edge` pointing out of `element`.
    pub fn outward_normal(&self, element: usize, local_edge: usize) -> [f64; 2] {
        let u = self.elements[element].edges[local_edge];
        let n = self.edges[u.edge].normal;
        [u.sign * n[0], u.sign * n[1]]
    }

    /// Boundary and crack edges with β(midpoint)·n < −[`INFLOW_TOL`]. Piecewise
    /// β is resolved with the adjacent element's centroid.
    pub fn classify_inflow(&self, beta: &VectorField) -> InflowSet {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_exterior())
            .filter_map(|(id, e)| {
                let b = beta.eval(e.midpoint(), self.elements[e.left].centroid);
                let bn = b[0] * e.normal[0] + b[1] * e.normal[1];
                (bn < -INFLOW_TOL).then_some((id, bn))
            })
            .collect();
        InflowSet { edges }
    }

    /// Plain-text dump: `points`, `elements` and `edges` sections, one entity
    /// per line (`id x y`, `id kind v…`, `id v0 v1 tag left right`), with
    /// `right = -1` for one-sided edges.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# pdwg mesh");
        let _ = writeln!(out, "domain {}", self.domain);
        let _ = writeln!(out, "kind {}", self.kind);
        let _ = writeln!(out, "level {}", self.level);
        let _ = writeln!(out, "points {}", self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.17e} {:.17e}", p.x, p.y);
        }
        let _ = writeln!(out, "elements {}", self.elements.len());
        for (i, el) in self.elements.iter().enumerate() {
            let vids: Vec<String> = el.vertices.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{i} {} {}", el.kind, vids.join(" "));
        }
        let _ = writeln!(out, "edges {}", self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let right = e.right.map_or(-1, |r| r as i64);
            let _ = writeln!(
                out,
                "{i} {} {} {} {} {right}",
                e.endpoints[0],
                e.endpoints[1],
                e.tag.as_str(),
                e.left
            );
        }
        out
    }
}
