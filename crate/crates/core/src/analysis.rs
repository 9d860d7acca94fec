//! Error norms and observed convergence rates.
//!
//! With `ε0 = λ0 − Q0λ`, `εb = λb − Qbλ` and `e_h = u_h` (the exact
//! multiplier is zero):
//!
//! ```text
//!   ‖ε0‖ = (Σ_T ‖ε0‖²_T)^½
//!   ‖εb‖ = (Σ_T h_T ‖εb‖²_∂T)^½        interior edges enter from both sides
//!   ‖e_h‖ = (Σ_T ‖u_h‖²_T)^½
//! ```

use std::fmt::Write as _;

use crate::assembly::{assemble_local, par_map, SchemeParams};
use crate::basis::EdgeBasis;
use crate::cases::TestCase;
use crate::linsolve::Solution;
use crate::mesh::Mesh;
use crate::weakcalc::ElementContext;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorReport {
    pub err_e0: f64,
    pub err_eb: f64,
    pub err_eh: f64,
    /// `s(ε, ε)^½` for `ε = λ_h − Q_hλ`.
    pub triple_wh: f64,
    /// `(τ₂ Σ_T h_T² ‖u_h‖²_T)^½`.
    pub triple_mh: f64,
}

fn quad_form(m: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * m[i * n + j] * v[j];
        }
    }
    s
}

#[derive(Default)]
struct Squares {
    e0: f64,
    eb: f64,
    eh: f64,
    wh: f64,
    mh: f64,
}

pub fn error_norms(solution: &Solution, case: &TestCase, mesh: &Mesh, params: &SchemeParams) -> Result<ErrorReport> {
    let exact = case.require_exact()?;
    let k = solution.k;
    let parts = par_map(mesh.elements.len(), |t| -> Result<Squares> {
        let ctx = ElementContext::new(mesh, t, k, params.quad_degree)?;
        let el = ctx.element();
        let sel = el.centroid;
        let q = ctx.project_weak(|p| exact.eval(p, sel))?;
        let (n0, nb) = (ctx.n0(), ctx.nb());
        let mut eps = Vec::with_capacity(ctx.nloc());
        eps.extend(solution.lambda0_of(t).iter().zip(&q[..n0]).map(|(a, b)| a - b));
        for (le, u) in el.edges.iter().enumerate() {
            let off = ctx.edge_offset(le);
            let lb = solution.lambdab_of(u.edge);
            eps.extend(lb.iter().zip(&q[off..off + nb]).map(|(a, b)| a - b));
        }
        let mut sq = Squares {
            e0: quad_form(&ctx.mass(n0), &eps[..n0]),
            ..Default::default()
        };
        let eb = EdgeBasis::new(k);
        for (le, rule) in ctx.edge_rules.iter().enumerate() {
            let off = ctx.edge_offset(le);
            let diff = &eps[off..off + nb];
            let on_edge: f64 = rule
                .params
                .iter()
                .zip(&rule.weights)
                .map(|(&s, &w)| w * eb.combine(diff, s).powi(2))
                .sum();
            sq.eb += el.diameter * on_edge;
        }
        let mu = ctx.mass(ctx.nu());
        sq.eh = quad_form(&mu, solution.u_of(t));
        sq.mh = params.tau2 * el.diameter * el.diameter * sq.eh;
        let blk = assemble_local(&ctx, case, params)?;
        sq.wh = quad_form(&blk.s, &eps);
        Ok(sq)
    });
    let mut total = Squares::default();
    for p in parts {
        let p = p?;
        total.e0 += p.e0;
        total.eb += p.eb;
        total.eh += p.eh;
        total.wh += p.wh;
        total.mh += p.mh;
    }
    Ok(ErrorReport {
        err_e0: total.e0.sqrt(),
        err_eb: total.eb.sqrt(),
        err_eh: total.eh.sqrt(),
        triple_wh: total.wh.max(0.0).sqrt(),
        triple_mh: total.mh.max(0.0).sqrt(),
    })
}

/// `log₂(previous / current)`.
pub fn rate(previous: f64, current: f64) -> Result<f64> {
    for v in [previous, current] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveError(v));
        }
    }
    Ok((previous / current).log2())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub inv_h: u64,
    pub errors: ErrorReport,
    pub rate_e0: Option<f64>,
    pub rate_eb: Option<f64>,
    pub rate_eh: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

pub const CSV_HEADER: &str = "inv_h,err_e0,rate_e0,err_eb,rate_eb,err_eh,rate_eh";

/// Scientific notation with five significant digits and a signed
/// two-digit exponent, e.g. `1.3458E-04`.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.4E}");
    match s.split_once('E') {
        Some((mantissa, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mantissa}E{sign}{:02}", e.abs())
        }
        None => s,
    }
}

impl RateTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_HEADER}");
        let r = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
        for row in &self.rows {
            let e = &row.errors;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.inv_h,
                format_sci(e.err_e0),
                r(row.rate_e0),
                format_sci(e.err_eb),
                r(row.rate_eb),
                format_sci(e.err_eh),
                r(row.rate_eh)
            );
        }
        out
    }

    pub fn last(&self) -> Option<&RateRow> {
        self.rows.last()
    }
}

/// Rates between consecutive levels. Every `‖ε0‖` and `‖εb‖` must be
/// positive; a vanishing `‖e_h‖` leaves its rate blank.
pub fn convergence_rates(levels: &[(u64, ErrorReport)]) -> Result<RateTable> {
    if levels.is_empty() {
        return Err(Error::TooFewLevels { needed: 1, got: 0 });
    }
    let mut rows: Vec<RateRow> = Vec::with_capacity(levels.len());
    for (i, &(inv_h, errors)) in levels.iter().enumerate() {
        for v in [errors.err_e0, errors.err_eb] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::NonPositiveError(v));
            }
        }
        let (rate_e0, rate_eb, rate_eh) = if i == 0 {
            (None, None, None)
        } else {
            let prev = &levels[i - 1].1;
            (
                Some(rate(prev.err_e0, errors.err_e0)?),
                Some(rate(prev.err_eb, errors.err_eb)?),
                rate(prev.err_eh, errors.err_eh).ok(),
            )
        };
        rows.push(RateRow {
            inv_h,
            errors,
            rate_e0,
            rate_eb,
            rate_eh,
        });
    }
    Ok(RateTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::SolveStats;
    use crate::mesh::{Domain, ElementKind};

    #[test]
    fn rate_values() {
        assert!((rate(5.6872e-4, 1.3458e-4).unwrap() - 2.0793).abs() < 5e-5);
        assert_eq!(rate(4.0, 1.0).unwrap(), 2.0);
        assert!(rate(0.0, 1.0).is_err());
        assert!(rate(1.0, -1.0).is_err());
    }

    #[test]
    fn sci_format() {
        assert_eq!(format_sci(1.3458e-4), "1.3458E-04");
        assert_eq!(format_sci(0.012345678), "1.2346E-02");
        assert_eq!(format_sci(123.0), "1.2300E+02");
        assert_eq!(format_sci(1.0), "1.0000E+00");
        assert_eq!(format_sci(2.5e-123), "2.5000E-123");
    }

    fn report(e: f64) -> ErrorReport {
        ErrorReport {
            err_e0: e,
            err_eb: 2.0 * e,
            err_eh: 0.5 * e,
            ..Default::default()
        }
    }

    #[test]
    fn csv_layout() {
        let t = convergence_rates(&[(1, report(1e-2)), (2, report(2.5e-3))]).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "1,1.0000E-02,,2.0000E-02,,5.0000E-03,");
        assert_eq!(lines[2], "2,2.5000E-03,2.0000,5.0000E-03,2.0000,1.2500E-03,2.0000");
        assert!(convergence_rates(&[]).is_err());
        assert!(convergence_rates(&[(1, report(0.0))]).is_err());
    }

    #[test]
    fn edge_norm_counts_each_side() {
        // λ_h = Q_hλ + {0, 1}: every edge error is 1, so ‖εb‖² = Σ_T h_T |∂T|
        let case = crate::cases::builtin_case("c1_tri_sq").unwrap();
        let mesh = Mesh::at_level(Domain::UnitSquare, ElementKind::Triangle, 0).unwrap();
        let params = SchemeParams::new(1, 1.0, 1.0);
        let exact = case.exact.as_ref().unwrap();
        let mut lambda0 = Vec::new();
        for t in 0..mesh.elements.len() {
            let ctx = ElementContext::new(&mesh, t, 1, 6).unwrap();
            let q = ctx.project_weak(|p| exact.eval(p, p)).unwrap();
            lambda0.extend_from_slice(&q[..3]);
        }
        let mut lambdab = Vec::new();
        for e in &mesh.edges {
            let mut q = crate::weakcalc::l2_project_edge(e, 1, |p| exact.eval(p, p), 6).unwrap();
            q[0] += 1.0;
            lambdab.extend(q);
        }
        let sol = Solution {
            k: 1,
            n0: 3,
            nb: 2,
            nu: 1,
            lambda0,
            lambdab,
            u: vec![0.0; 2],
            stats: SolveStats {
                n: 0,
                nnz: 0,
                rcond: 1.0,
                residual: 0.0,
            },
        };
        let r = error_norms(&sol, &case, &mesh, &params).unwrap();
        let s2 = 2f64.sqrt();
        let expected = (2.0 * s2 * (2.0 + s2)).sqrt();
        assert!((r.err_eb - expected).abs() < 1e-12, "{} vs {expected}", r.err_eb);
        assert!(r.err_e0 < 1e-14);
        assert_eq!(r.err_eh, 0.0);
        // the jump term alone: h⁻¹ Σ |∂T| with unit jumps
        let wh2 = 2.0 * (2.0 + s2) / s2;
        assert!((r.triple_wh - wh2.sqrt()).abs() < 1e-12);
    }
}
