//! Local and global assembly of the symmetric saddle-point system
//!
//! ```text
//!   [ S  Bᵀ ] [λ]   [F_σ]
//!   [ B  −D ] [u] = [F_v]
//! ```
//!
//! where, element by element,
//! `s(ρ, σ) = h⁻¹⟨ρ0 − ρb, σ0 − σb⟩_∂T + τ₁(β·∇ρ0 − cρ0, β·∇σ0 − cσ0)_T`,
//! `b(σ, v) = (β·∇_w σ − cσ0, v)_T`, `D = τ₂ h² M_{k−1}`,
//! `F_σ = τ₁(f, β·∇σ0 − cσ0)_T` and `F_v = (f, v)_T`.
//!
//! Inflow edge unknowns are fixed to the edge projection of `g` and removed
//! from the system symmetrically; their contributions move to the right-hand
//! side.

use crate::basis::{dim, EdgeBasis};
use crate::cases::TestCase;
use crate::mesh::{InflowSet, Mesh};
use crate::sparse::{CscMatrix, TripletBuilder};
use crate::weakcalc::{l2_project_edge, ElementContext, WeakGradientTable};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParams {
    /// Polynomial degree of `λ0` and `λb`; the multiplier has degree `k − 1`.
    pub k: usize,
    pub tau1: f64,
    pub tau2: f64,
    /// Exactness degree of element and edge quadrature.
    pub quad_degree: usize,
}

impl SchemeParams {
    pub fn new(k: usize, tau1: f64, tau2: f64) -> Self {
        Self {
            k,
            tau1,
            tau2,
            quad_degree: 2 * k + 4,
        }
    }
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self::new(1, 1.0, 1.0)
    }
}

/// Global numbering: all `λ0` coefficients element by element, then all
/// `λb` coefficients edge by edge, then all `u` coefficients. The free
/// numbering drops constrained inflow coefficients and keeps that order.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub k: usize,
    pub n0: usize,
    pub nb: usize,
    pub nu: usize,
    pub n_elements: usize,
    pub n_edges: usize,
    pub constrained_edges: Vec<bool>,
    free_index: Vec<Option<usize>>,
    n_free: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, k: usize, inflow: &InflowSet) -> Self {
        let (n0, nb, nu) = (dim(k), k + 1, dim(k - 1));
        let mut constrained_edges = vec![false; mesh.edges.len()];
        for e in inflow.ids() {
            constrained_edges[e] = true;
        }
        let mut map = Self {
            k,
            n0,
            nb,
            nu,
            n_elements: mesh.elements.len(),
            n_edges: mesh.edges.len(),
            constrained_edges,
            free_index: Vec::new(),
            n_free: 0,
        };
        let total = map.n_total();
        let mut free_index = Vec::with_capacity(total);
        let mut next = 0;
        for g in 0..total {
            if map.is_constrained(g) {
                free_index.push(None);
            } else {
                free_index.push(Some(next));
                next += 1;
            }
        }
        map.free_index = free_index;
        map.n_free = next;
        map
    }

    pub fn n_total(&self) -> usize {
        self.n_elements * (self.n0 + self.nu) + self.n_edges * self.nb
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_constrained(&self) -> usize {
        self.n_total() - self.n_free
    }

    pub fn lambda0(&self, elem: usize, i: usize) -> usize {
        elem * self.n0 + i
    }

    pub fn lambdab(&self, edge: usize, m: usize) -> usize {
        self.n_elements * self.n0 + edge * self.nb + m
    }

    pub fn u(&self, elem: usize, a: usize) -> usize {
        self.n_elements * self.n0 + self.n_edges * self.nb + elem * self.nu + a
    }

    fn is_constrained(&self, g: usize) -> bool {
        let start = self.n_elements * self.n0;
        let end = start + self.n_edges * self.nb;
        (start..end).contains(&g) && self.constrained_edges[(g - start) / self.nb]
    }

    pub fn free(&self, g: usize) -> Option<usize> {
        self.free_index[g]
    }

    /// Global ids of a local weak function on `elem`.
    pub fn local_to_global(&self, mesh: &Mesh, elem: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.n0).map(|i| self.lambda0(elem, i)).collect();
        for u in &mesh.elements[elem].edges {
            out.extend((0..self.nb).map(|m| self.lambdab(u.edge, m)));
        }
        out
    }
}

/// Dense local matrices, row-major.
#[derive(Clone, Debug)]
pub struct LocalBlocks {
    pub nloc: usize,
    pub nu: usize,
    /// `nloc × nloc`
    pub s: Vec<f64>,
    /// `nu × nloc`
    pub b: Vec<f64>,
    /// `nu × nu`
    pub d: Vec<f64>,
    pub f_sigma: Vec<f64>,
    pub f_v: Vec<f64>,
}

/// Local blocks of element `ctx.elem`. Coefficients are resolved with the
/// element centroid as region selector.
pub fn assemble_local(ctx: &ElementContext<'_>, case: &TestCase, params: &SchemeParams) -> Result<LocalBlocks> {
    let el = ctx.element();
    let sel = el.centroid;
    let h = el.diameter;
    let (n0, nu, nloc) = (ctx.n0(), ctx.nu(), ctx.nloc());
    let wg = WeakGradientTable::build(ctx, ctx.k - 1)?;
    if wg.nloc != nloc || wg.nr != nu {
        return Err(Error::LocalBlock(format!(
            "weak gradient table is {}x{}, expected {nu}x{nloc}",
            wg.nr, wg.nloc
        )));
    }
    let mut s = vec![0.0; nloc * nloc];
    let mut b = vec![0.0; nu * nloc];
    let mut f_sigma = vec![0.0; nloc];
    let mut f_v = vec![0.0; nu];
    let mut wx = vec![0.0; nloc];
    let mut wy = vec![0.0; nloc];
    let mut l = vec![0.0; n0];
    for (&p, &w) in ctx.rule.points.iter().zip(&ctx.rule.weights) {
        let beta = case.beta_at(p, sel);
        let c = case.c_at(p, sel);
        let f = case.forcing_at(p, sel);
        let phi = ctx.basis.eval(p);
        let grad = ctx.basis.grad(p);
        for i in 0..n0 {
            l[i] = beta[0] * grad[i][0] + beta[1] * grad[i][1] - c * phi[i];
        }
        for i in 0..n0 {
            let li = params.tau1 * w * l[i];
            for j in i..n0 {
                s[i * nloc + j] += li * l[j];
            }
            f_sigma[i] += li * f;
        }
        // weak gradient of every local basis function at p
        for i in 0..nloc {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (j, &pj) in phi.iter().enumerate().take(nu) {
                gx += wg.gx[j * nloc + i] * pj;
                gy += wg.gy[j * nloc + i] * pj;
            }
            wx[i] = gx;
            wy[i] = gy;
        }
        for a in 0..nu {
            let va = w * phi[a];
            for i in 0..nloc {
                let mut coupling = beta[0] * wx[i] + beta[1] * wy[i];
                if i < n0 {
                    coupling -= c * phi[i];
                }
                b[a * nloc + i] += va * coupling;
            }
            f_v[a] += va * f;
        }
    }
    // h⁻¹⟨ρ0 − ρb, σ0 − σb⟩ on each edge
    let eb = EdgeBasis::new(ctx.k);
    let mut jump = vec![0.0; nloc];
    for (le, rule) in ctx.edge_rules.iter().enumerate() {
        let off = ctx.edge_offset(le);
        for ((&t, &p), &w) in rule.params.iter().zip(&rule.points).zip(&rule.weights) {
            jump.iter_mut().for_each(|v| *v = 0.0);
            jump[..n0].copy_from_slice(&ctx.basis.eval(p));
            for (m, sm) in eb.eval(t).into_iter().enumerate() {
                jump[off + m] = -sm;
            }
            let wh = w / h;
            for i in 0..nloc {
                if jump[i] == 0.0 {
                    continue;
                }
                let ji = wh * jump[i];
                for j in i..nloc {
                    s[i * nloc + j] += ji * jump[j];
                }
            }
        }
    }
    for i in 0..nloc {
        for j in 0..i {
            s[i * nloc + j] = s[j * nloc + i];
        }
    }
    let scale = params.tau2 * h * h;
    let d = ctx.mass(nu).into_iter().map(|m| scale * m).collect();
    Ok(LocalBlocks {
        nloc,
        nu,
        s,
        b,
        d,
        f_sigma,
        f_v,
    })
}

/// Assembled system on the free unknowns.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    pub inflow: InflowSet,
    /// Values of every global unknown that is fixed by inflow data; zero
    /// elsewhere.
    pub fixed_values: Vec<f64>,
    pub params: SchemeParams,
}

pub(crate) fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Local blocks of every element, in element order.
pub fn local_blocks(mesh: &Mesh, case: &TestCase, params: &SchemeParams) -> Result<Vec<LocalBlocks>> {
    par_map(mesh.elements.len(), |t| {
        let ctx = ElementContext::new(mesh, t, params.k, params.quad_degree)?;
        assemble_local(&ctx, case, params)
    })
    .into_iter()
    .collect()
}

pub fn assemble_global(mesh: &Mesh, case: &TestCase, params: &SchemeParams) -> Result<SaddleSystem> {
    if params.k == 0 {
        return Err(Error::LocalBlock("polynomial degree k must be at least 1".into()));
    }
    let inflow = mesh.classify_inflow(&case.beta);
    let dofs = DofMap::new(mesh, params.k, &inflow);
    let mut fixed_values = vec![0.0; dofs.n_total()];
    for e in inflow.ids() {
        let edge = &mesh.edges[e];
        let sel = mesh.elements[edge.left].centroid;
        let g = l2_project_edge(edge, params.k, |p| case.inflow_at(p, sel), params.quad_degree)?;
        for (m, v) in g.into_iter().enumerate() {
            fixed_values[dofs.lambdab(e, m)] = v;
        }
    }
    let blocks = local_blocks(mesh, case, params)?;

    let n = dofs.n_free();
    let nnz_hint: usize = blocks.iter().map(|b| b.nloc * b.nloc + 2 * b.nu * b.nloc + b.nu * b.nu).sum();
    let mut trips = TripletBuilder::with_capacity(n, n, nnz_hint);
    let mut rhs = vec![0.0; n];
    for (t, blk) in blocks.iter().enumerate() {
        let l2g = dofs.local_to_global(mesh, t);
        let nloc = blk.nloc;
        for i in 0..nloc {
            let gi = l2g[i];
            for (j, &gj) in l2g.iter().enumerate().skip(i) {
                let v = blk.s[i * nloc + j];
                match (dofs.free(gi), dofs.free(gj)) {
                    (Some(fi), Some(fj)) => trips.push_sym(fi, fj, v),
                    (Some(fi), None) => rhs[fi] -= v * fixed_values[gj],
                    (None, Some(fj)) => rhs[fj] -= v * fixed_values[gi],
                    (None, None) => {}
                }
            }
            if let Some(fi) = dofs.free(gi) {
                rhs[fi] += blk.f_sigma[i];
            }
        }
        for a in 0..blk.nu {
            let fu = dofs.free(dofs.u(t, a)).expect("multiplier unknowns are free");
            for i in 0..nloc {
                let v = blk.b[a * nloc + i];
                match dofs.free(l2g[i]) {
                    Some(fi) => trips.push_sym(fu, fi, v),
                    None => rhs[fu] -= v * fixed_values[l2g[i]],
                }
            }
            for c in a..blk.nu {
                let fc = dofs.free(dofs.u(t, c)).expect("multiplier unknowns are free");
                trips.push_sym(fu, fc, -blk.d[a * blk.nu + c]);
            }
            rhs[fu] += blk.f_v[a];
        }
    }
    Ok(SaddleSystem {
        matrix: trips.build(),
        rhs,
        dofs,
        inflow,
        fixed_values,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{builtin_case, Expr, Forcing, Piecewise};
    use crate::mesh::{Domain, ElementKind, Point2};

    fn unit_triangle() -> Mesh {
        Mesh::from_cells(
            Domain::UnitSquare,
            ElementKind::Triangle,
            0,
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![vec![0, 1, 2]],
        )
    }

    #[test]
    fn dof_counts() {
        let case = builtin_case("c1_tri_sq").unwrap();
        let m = Mesh::at_level(Domain::UnitSquare, ElementKind::Triangle, 0).unwrap();
        let inflow = m.classify_inflow(&case.beta);
        let d = DofMap::new(&m, 1, &inflow);
        assert_eq!((d.n_total(), d.n_constrained(), d.n_free()), (18, 4, 14));
        let d2 = DofMap::new(&m, 2, &inflow);
        assert_eq!(d2.n_total(), 33);
        let sys = assemble_global(&m, &case, &SchemeParams::new(1, 1.0, 1.0)).unwrap();
        assert_eq!(sys.matrix.n_rows, 14);
        // u unknowns come last in the free numbering
        assert_eq!(d.free(d.u(1, 0)), Some(13));
    }

    #[test]
    fn multiplier_block_on_unit_triangle() {
        let m = unit_triangle();
        let case = builtin_case("c1_tri_sq").unwrap();
        let ctx = ElementContext::new(&m, 0, 1, 6).unwrap();
        let blk = assemble_local(&ctx, &case, &SchemeParams::new(1, 1.0, 1.0)).unwrap();
        // τ₂ h² |T| with h = √2 and |T| = 1/2
        assert!((blk.d[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_weak_function_annihilated() {
        let m = Mesh::at_level(Domain::LShape, ElementKind::Triangle, 1).unwrap();
        let mut case = builtin_case("c3_disc").unwrap();
        case.c = Piecewise::uniform(Expr::constant(0.0));
        for k in [1, 2] {
            for t in [0, 7, 23] {
                let ctx = ElementContext::new(&m, t, k, 2 * k + 4).unwrap();
                let blk = assemble_local(&ctx, &case, &SchemeParams::new(k, 1.0, 1.0)).unwrap();
                let one = ctx.project_weak(|_| 1.0).unwrap();
                let nloc = blk.nloc;
                for i in 0..nloc {
                    let si: f64 = (0..nloc).map(|j| blk.s[i * nloc + j] * one[j]).sum();
                    assert!(si.abs() < 1e-12);
                }
                for a in 0..blk.nu {
                    let ba: f64 = (0..nloc).map(|j| blk.b[a * nloc + j] * one[j]).sum();
                    assert!(ba.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn global_matrix_exactly_symmetric() {
        for (id, level) in [("c1_tri_sq", 2), ("c1_rect_sq", 1), ("c2_tri_crack", 1), ("c3_disc", 2), ("c2_rot_sq", 1)] {
            let case = builtin_case(id).unwrap();
            let m = Mesh::at_level(case.domain, case.element_kind, level).unwrap();
            for k in [1, 2] {
                let sys = assemble_global(&m, &case, &SchemeParams::new(k, 1.0, 1.0)).unwrap();
                assert!(sys.matrix.is_exactly_symmetric(), "{id} k={k}");
            }
        }
    }

    #[test]
    fn block_signs() {
        let case = builtin_case("c1_tri_sq").unwrap();
        let m = Mesh::at_level(Domain::UnitSquare, ElementKind::Triangle, 1).unwrap();
        let sys = assemble_global(&m, &case, &SchemeParams::new(1, 1.0, 1.0)).unwrap();
        let d = &sys.dofs;
        for g in 0..d.n_total() {
            let Some(f) = d.free(g) else { continue };
            let diag = sys.matrix.get(f, f);
            if g >= d.u(0, 0) {
                assert!(diag < 0.0);
            } else {
                assert!(diag > 0.0);
            }
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let case = builtin_case("c3_disc").unwrap();
        let m = Mesh::at_level(Domain::UnitSquare, ElementKind::Triangle, 2).unwrap();
        let p = SchemeParams::new(2, 1.0, 1.0);
        let a = assemble_global(&m, &case, &p).unwrap();
        let b = assemble_global(&m, &case, &p).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn forcing_only_on_interior_rows() {
        let m = unit_triangle();
        let mut case = builtin_case("c1_tri_sq").unwrap();
        case.forcing = Forcing::Given(Piecewise::uniform(Expr::constant(1.0)));
        let ctx = ElementContext::new(&m, 0, 2, 8).unwrap();
        let blk = assemble_local(&ctx, &case, &SchemeParams::new(2, 1.0, 1.0)).unwrap();
        assert!(blk.f_sigma[ctx.n0()..].iter().all(|&v| v == 0.0));
        assert!((blk.f_v[0] - 0.5).abs() < 1e-14);
    }
}
