//! Sparse direct solution of the saddle-point system.
//!
//! The free system is factored with a sparse LU with partial pivoting.
//! Besides structural rank deficiency reported by the factorization, a
//! numerically singular matrix is detected through a 1-norm estimate of the
//! reciprocal condition number. One step of iterative refinement follows
//! the first solve, and the final relative residual is checked.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::linalg::LuError;
use faer::Mat;

use crate::assembly::SaddleSystem;
use crate::sparse::CscMatrix;
use crate::{Error, Result};

/// Reciprocal condition estimates below this are reported as singular.
pub const RCOND_TOL: f64 = 1e-14;
/// Bound on `‖Ax − b‖∞ / max(‖b‖∞, 1)` after refinement.
pub const RESIDUAL_TOL: f64 = 1e-10;

pub struct SparseLu {
    lu: Lu<usize, f64>,
    n: usize,
    norm_1: f64,
}

impl SparseLu {
    pub fn factor(a: &CscMatrix) -> Result<Self> {
        let lu = a.to_faer().sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::StructurallySingular { index },
            LuError::Generic(g) => Error::Factorization(format!("{g:?}")),
        })?;
        Ok(Self {
            lu,
            n: a.n_cols,
            norm_1: a.norm_1(),
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Hager–Higham estimate of `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
    pub fn rcond(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = norm1(&y);
            if !est.is_finite() {
                return 0.0;
            }
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bj, bm), (i, v)| if v.abs() > bm { (i, v.abs()) } else { (bj, bm) });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }
        // alternating test vector guards against unlucky cancellation
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let alt_est = 2.0 * norm1(&self.solve(&alt)) / (3.0 * n as f64);
        let inv_norm = est.max(alt_est);
        if !inv_norm.is_finite() || self.norm_1 == 0.0 {
            return 0.0;
        }
        1.0 / (self.norm_1 * inv_norm)
    }
}

/// Diagnostics of one linear solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub n: usize,
    pub nnz: usize,
    pub rcond: f64,
    pub residual: f64,
}

/// Solves `A x = b`, failing on singular matrices or an excessive residual.
pub fn solve_sparse(a: &CscMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
    let lu = SparseLu::factor(a)?;
    let rcond = lu.rcond();
    if rcond < RCOND_TOL {
        return Err(Error::NumericallySingular { rcond });
    }
    let mut x = lu.solve(b);
    let residual_of = |x: &[f64]| -> Vec<f64> {
        a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
    };
    let r = residual_of(&x);
    let dx = lu.solve(&r);
    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let residual = residual_of(&x).iter().fold(0.0f64, |m, v| m.max(v.abs())) / bnorm;
    if residual.is_nan() || residual > RESIDUAL_TOL {
        return Err(Error::Residual {
            residual,
            tolerance: RESIDUAL_TOL,
        });
    }
    Ok((
        x,
        SolveStats {
            n: a.n_cols,
            nnz: a.nnz(),
            rcond,
            residual,
        },
    ))
}

/// Discrete solution `{λ0, λb}` and multiplier `u`, with inflow edge
/// coefficients filled in from the boundary data.
#[derive(Clone, Debug)]
pub struct Solution {
    pub k: usize,
    pub n0: usize,
    pub nb: usize,
    pub nu: usize,
    pub lambda0: Vec<f64>,
    pub lambdab: Vec<f64>,
    pub u: Vec<f64>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn lambda0_of(&self, elem: usize) -> &[f64] {
        &self.lambda0[elem * self.n0..(elem + 1) * self.n0]
    }

    pub fn lambdab_of(&self, edge: usize) -> &[f64] {
        &self.lambdab[edge * self.nb..(edge + 1) * self.nb]
    }

    pub fn u_of(&self, elem: usize) -> &[f64] {
        &self.u[elem * self.nu..(elem + 1) * self.nu]
    }
}

pub fn factor_solve(system: &SaddleSystem) -> Result<Solution> {
    let (x, stats) = solve_sparse(&system.matrix, &system.rhs)?;
    let d = &system.dofs;
    let value = |g: usize| d.free(g).map_or(system.fixed_values[g], |f| x[f]);
    let lambda0 = (0..d.n_elements * d.n0).map(|i| value(d.lambda0(0, 0) + i)).collect();
    let lambdab = (0..d.n_edges * d.nb).map(|i| value(d.lambdab(0, 0) + i)).collect();
    let u = (0..d.n_elements * d.nu).map(|i| value(d.u(0, 0) + i)).collect();
    Ok(Solution {
        k: d.k,
        n0: d.n0,
        nb: d.nb,
        nu: d.nu,
        lambda0,
        lambdab,
        u,
        stats,
    })
}
