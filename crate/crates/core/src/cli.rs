//! Run configuration and the entry points behind the `pdwg` binary.
//!
//! Configuration files use a flat `key = value` grammar. Blank lines and
//! lines starting with `#` are ignored. Top-level keys are `case`, `k`,
//! `tau1`, `tau2`, `levels`, `element`, `out`, `plot_out` and `density`. An
//! optional `[case]` section defines a case inline through the keys `base`,
//! `id`, `domain`, `element`, `beta`, `c`, `lambda`, `f` and `g`:
//!
//! ```text
//! k = 2
//! levels = 0..4
//!
//! [case]
//! base = c1_tri_sq
//! beta = [1, -1] if y < 1 - x else [-2, 2]
//! lambda = sin(x)*cos(y)
//! ```
//!
//! `levels` accepts a range `a..b` (inclusive), a comma list, or a single
//! number `n` meaning `0..n`.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use crate::analysis::{convergence_rates, error_norms, ErrorReport, RateTable};
use crate::assembly::{assemble_global, SchemeParams};
use crate::basis::ElementBasis;
use crate::cases::{builtin_case, Expr, Forcing, Piecewise, ScalarField, TestCase, VectorField};
use crate::linsolve::{factor_solve, Solution};
use crate::mesh::{Domain, ElementKind, Mesh, Point2};
use crate::{Error, Result};

/// Keys of an inline `[case]` section, kept as text until resolved.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InlineCase {
    pub base: Option<String>,
    pub id: Option<String>,
    pub domain: Option<Domain>,
    pub element: Option<ElementKind>,
    pub beta: Option<VectorField>,
    pub c: Option<ScalarField>,
    pub lambda: Option<ScalarField>,
    pub f: Option<ScalarField>,
    pub g: Option<ScalarField>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: Option<String>,
    pub inline: Option<InlineCase>,
    pub k: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub levels: Vec<u32>,
    pub element: Option<ElementKind>,
    pub out: Option<PathBuf>,
    pub plot_out: Option<PathBuf>,
    pub density: usize,
    pub warnings: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: None,
            inline: None,
            k: 1,
            tau1: 1.0,
            tau2: 1.0,
            levels: (0..=5).collect(),
            element: None,
            out: None,
            plot_out: None,
            density: 3,
            warnings: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> SchemeParams {
        SchemeParams::new(self.k, self.tau1, self.tau2)
    }

    /// Finest requested level, used by single solves and plot export.
    pub fn finest_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    pub fn set_k(&mut self, k: usize) -> std::result::Result<(), String> {
        if !(1..=2).contains(&k) {
            return Err(format!("k must be 1 or 2, got {k}"));
        }
        self.k = k;
        Ok(())
    }

    pub fn set_tau2(&mut self, tau2: f64) {
        if tau2 < 0.0 {
            self.warnings
                .push(format!("tau2 = {tau2} is negative; the scheme is only analysed for tau2 >= 0"));
        }
        self.tau2 = tau2;
    }

    pub fn set_density(&mut self, density: usize) -> std::result::Result<(), String> {
        if density == 0 {
            return Err("density must be at least 1".into());
        }
        self.density = density;
        Ok(())
    }
}

pub fn parse_levels(text: &str) -> std::result::Result<Vec<u32>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| format!("bad level `{}`", s.trim()))
    };
    let mut levels: Vec<u32> = if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(format!("empty level range `{text}`"));
        }
        (a..=b).collect()
    } else if text.contains(',') {
        text.split(',').map(num).collect::<std::result::Result<_, _>>()?
    } else {
        (0..=num(text)?).collect()
    };
    levels.sort_unstable();
    levels.dedup();
    if levels.is_empty() {
        return Err("no levels given".into());
    }
    Ok(levels)
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, got `{v}`"))
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut in_case = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Config {
            line: line_no,
            message,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if line != "[case]" {
                return Err(err(format!("unknown section `{line}`")));
            }
            if cfg.inline.is_some() {
                return Err(err("duplicate [case] section".into()));
            }
            cfg.inline = Some(InlineCase::default());
            in_case = true;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if in_case {
            let case = cfg.inline.as_mut().expect("section opened");
            let expr_err = |e: Error| err(e.to_string());
            match key {
                "base" => case.base = Some(value.to_string()),
                "id" => case.id = Some(value.to_string()),
                "domain" => case.domain = Some(value.parse().map_err(err)?),
                "element" => case.element = Some(value.parse().map_err(err)?),
                "beta" => case.beta = Some(VectorField::parse(value).map_err(expr_err)?),
                "c" => case.c = Some(ScalarField::parse(value).map_err(expr_err)?),
                "lambda" => case.lambda = Some(ScalarField::parse(value).map_err(expr_err)?),
                "f" => case.f = Some(ScalarField::parse(value).map_err(expr_err)?),
                "g" => case.g = Some(ScalarField::parse(value).map_err(expr_err)?),
                _ => return Err(err(format!("unknown key `{key}` in [case]"))),
            }
            continue;
        }
        match key {
            "case" => cfg.case = Some(value.to_string()),
            "k" => {
                let k = value
                    .parse::<usize>()
                    .map_err(|_| err(format!("bad k `{value}`")))?;
                cfg.set_k(k).map_err(err)?;
            }
            "tau1" => cfg.tau1 = parse_f64(value).map_err(err)?,
            "tau2" => cfg.set_tau2(parse_f64(value).map_err(err)?),
            "levels" => cfg.levels = parse_levels(value).map_err(err)?,
            "element" => cfg.element = Some(value.parse().map_err(err)?),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "plot_out" => cfg.plot_out = Some(PathBuf::from(value)),
            "density" => {
                let d = value
                    .parse::<usize>()
                    .map_err(|_| err(format!("bad density `{value}`")))?;
                cfg.set_density(d).map_err(err)?;
            }
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }
    Ok(cfg)
}

/// The test case selected by `config`, with the element override applied.
pub fn resolve_case(config: &RunConfig) -> Result<TestCase> {
    let mut case = match &config.inline {
        Some(inline) => {
            let base = inline.base.as_deref().or(config.case.as_deref());
            let mut case = match base {
                Some(id) => builtin_case(id)?,
                None => TestCase {
                    id: "custom".into(),
                    description: "inline case".into(),
                    domain: Domain::UnitSquare,
                    element_kind: ElementKind::Triangle,
                    beta: Piecewise::uniform([Expr::constant(1.0), Expr::constant(1.0)]),
                    c: Piecewise::uniform(Expr::constant(0.0)),
                    exact: None,
                    forcing: Forcing::Given(Piecewise::uniform(Expr::constant(0.0))),
                    inflow: Piecewise::uniform(Expr::constant(0.0)),
                },
            };
            case.id = inline.id.clone().unwrap_or_else(|| format!("{}+inline", case.id));
            case.description = "inline case".into();
            if let Some(d) = inline.domain {
                case.domain = d;
            }
            if let Some(k) = inline.element {
                case.element_kind = k;
            }
            if let Some(b) = &inline.beta {
                case.beta = b.clone();
            }
            if let Some(c) = &inline.c {
                case.c = c.clone();
            }
            if let Some(l) = &inline.lambda {
                case.exact = Some(l.clone());
                case.forcing = Forcing::Manufactured;
                case.inflow = l.clone();
            }
            if let Some(f) = &inline.f {
                case.forcing = Forcing::Given(f.clone());
            }
            if let Some(g) = &inline.g {
                case.inflow = g.clone();
            }
            case
        }
        None => {
            let id = config
                .case
                .as_deref()
                .ok_or_else(|| Error::Config {
                    line: 0,
                    message: "no case selected (use --case or a [case] section)".into(),
                })?;
            builtin_case(id)?
        }
    };
    if let Some(kind) = config.element {
        case.element_kind = kind;
    }
    Ok(case)
}

/// Result of one solve on one mesh level.
#[derive(Clone, Debug)]
pub struct LevelResult {
    pub mesh: Mesh,
    pub solution: Solution,
    pub n_unknowns: usize,
    pub n_inflow_edges: usize,
    pub errors: Option<ErrorReport>,
}

pub fn solve_on(mesh: Mesh, case: &TestCase, params: &SchemeParams) -> Result<LevelResult> {
    let level = mesh.level;
    let wrap = |e: Error| Error::Level {
        level,
        source: Box::new(e),
    };
    let system = assemble_global(&mesh, case, params).map_err(wrap)?;
    let solution = factor_solve(&system).map_err(wrap)?;
    let errors = match case.exact {
        Some(_) => Some(error_norms(&solution, case, &mesh, params).map_err(wrap)?),
        None => None,
    };
    Ok(LevelResult {
        n_unknowns: system.dofs.n_free(),
        n_inflow_edges: system.inflow.len(),
        mesh,
        solution,
        errors,
    })
}

/// Solves on every configured level and tabulates errors and rates.
pub fn run_convergence(config: &RunConfig) -> Result<RateTable> {
    let case = resolve_case(config)?;
    case.require_exact()?;
    let params = config.params();
    let mut levels = config.levels.clone();
    levels.sort_unstable();
    let mut mesh = Mesh::at_level(case.domain, case.element_kind, levels[0])?;
    let mut reports = Vec::with_capacity(levels.len());
    for &level in &levels {
        while mesh.level < level {
            mesh = mesh.refine();
        }
        let inv_h = mesh.stats().inv_h_label;
        let result = solve_on(mesh.clone(), &case, &params)?;
        reports.push((inv_h, result.errors.expect("case has an exact solution")));
    }
    let table = convergence_rates(&reports)?;
    if let Some(path) = &config.out {
        fs::write(path, table.to_csv())?;
    }
    Ok(table)
}

/// Reference coordinates of `density²` sample points per element: the
/// centroids of a uniform sub-triangulation, or a tensor grid on
/// rectangles.
pub fn sample_points(kind: ElementKind, density: usize) -> Vec<[f64; 2]> {
    let n = density as f64;
    let mut out = Vec::with_capacity(density * density);
    match kind {
        ElementKind::Triangle => {
            for j in 0..density {
                for i in 0..density - j {
                    out.push([(i as f64 + 1.0 / 3.0) / n, (j as f64 + 1.0 / 3.0) / n]);
                    if i + j + 1 < density {
                        out.push([(i as f64 + 2.0 / 3.0) / n, (j as f64 + 2.0 / 3.0) / n]);
                    }
                }
            }
        }
        ElementKind::Rectangle => {
            for j in 0..density {
                for i in 0..density {
                    out.push([(i as f64 + 0.5) / n, (j as f64 + 0.5) / n]);
                }
            }
        }
    }
    out
}

/// `(x, y, λ0)` samples of a discrete solution, element by element.
pub fn sample_solution(mesh: &Mesh, solution: &Solution, density: usize) -> Vec<[f64; 3]> {
    let mut rows = Vec::new();
    for (t, el) in mesh.elements.iter().enumerate() {
        let basis = ElementBasis::new(el, solution.k);
        let v = &el.coords;
        let (e1, e2) = match el.kind {
            ElementKind::Triangle => (v[1], v[2]),
            ElementKind::Rectangle => (v[1], v[3]),
        };
        for [s, r] in sample_points(el.kind, density) {
            let p = Point2::new(
                v[0].x + s * (e1.x - v[0].x) + r * (e2.x - v[0].x),
                v[0].y + s * (e1.y - v[0].y) + r * (e2.y - v[0].y),
            );
            rows.push([p.x, p.y, basis.combine(solution.lambda0_of(t), p)]);
        }
    }
    rows
}

pub const PLOT_HEADER: &str = "x,y,lambda0";

pub fn plot_csv(rows: &[[f64; 3]]) -> String {
    let mut out = String::with_capacity(40 * (rows.len() + 1));
    out.push_str(PLOT_HEADER);
    out.push('\n');
    for [x, y, v] in rows {
        out.push_str(&format!("{x:.8},{y:.8},{v:.12e}\n"));
    }
    out
}

/// Solves once on the finest configured level and returns the point-cloud
/// CSV, also writing it to `plot_out` when set.
pub fn export_plot(config: &RunConfig) -> Result<String> {
    let case = resolve_case(config)?;
    let mesh = Mesh::at_level(case.domain, case.element_kind, config.finest_level())?;
    let result = solve_on(mesh, &case, &config.params())?;
    let csv = plot_csv(&sample_solution(&result.mesh, &result.solution, config.density));
    if let Some(path) = &config.plot_out {
        fs::write(path, &csv)?;
    }
    Ok(csv)
}

/// Human-readable summary of a single solve.
pub struct SolveSummary<'a> {
    pub case: &'a TestCase,
    pub params: SchemeParams,
    pub result: &'a LevelResult,
}

impl fmt::Display for SolveSummary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.result;
        let s = r.mesh.stats();
        writeln!(f, "case      {} ({})", self.case.id, self.case.description)?;
        writeln!(
            f,
            "mesh      {} {} level {} (1/h = {}): {} elements, {} edges, max h = {:.4e}",
            r.mesh.domain, r.mesh.kind, r.mesh.level, s.inv_h_label, s.n_elements, s.n_edges, s.max_diameter
        )?;
        writeln!(
            f,
            "scheme    k = {}, tau1 = {}, tau2 = {}",
            self.params.k, self.params.tau1, self.params.tau2
        )?;
        writeln!(
            f,
            "system    {} unknowns, {} nonzeros, {} inflow edges",
            r.n_unknowns, r.solution.stats.nnz, r.n_inflow_edges
        )?;
        writeln!(
            f,
            "solver    rcond ~ {:.3e}, residual {:.3e}",
            r.solution.stats.rcond, r.solution.stats.residual
        )?;
        if let Some(e) = &r.errors {
            writeln!(
                f,
                "errors    |e0| = {:.4e}, |eb| = {:.4e}, |e_h| = {:.4e}",
                e.err_e0, e.err_eb, e.err_eh
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.k, 1);
        assert_eq!((cfg.tau1, cfg.tau2), (1.0, 1.0));
        assert_eq!(cfg.levels, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(cfg.density, 3);
        assert!(cfg.warnings.is_empty());
    }

    #[test]
    fn keys_and_errors() {
        let cfg = parse_config("# comment\ncase = c1_tri_sq\nk = 2\ntau1 = 0\nlevels = 1..3\nelement = rect\n").unwrap();
        assert_eq!(cfg.case.as_deref(), Some("c1_tri_sq"));
        assert_eq!((cfg.k, cfg.tau1), (2, 0.0));
        assert_eq!(cfg.levels, vec![1, 2, 3]);
        assert_eq!(cfg.element, Some(ElementKind::Rectangle));

        let cfg = parse_config("tau2 = -1").unwrap();
        assert_eq!(cfg.tau2, -1.0);
        assert_eq!(cfg.warnings.len(), 1);

        match parse_config("k = 1\nkk = 1") {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("kk"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_config("k = 3").is_err());
        assert!(parse_config("density = 0").is_err());
        assert!(parse_config("levels = 3..1").is_err());
        assert!(parse_config("[other]").is_err());
        assert!(parse_config("just text").is_err());
    }

    #[test]
    fn level_syntax() {
        assert_eq!(parse_levels("3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_levels("2, 4,3").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_levels("1..=2").unwrap(), vec![1, 2]);
        assert!(parse_levels("a").is_err());
    }

    #[test]
    fn inline_case() {
        let text = "[case]\nbase = c1_tri_sq\nid = mine\nbeta = [1, -1] if y < 1 - x else [-2, 2]\nlambda = sin(x)*cos(y)\n";
        let cfg = parse_config(text).unwrap();
        let case = resolve_case(&cfg).unwrap();
        let reference = builtin_case("c3_disc").unwrap();
        assert_eq!(case.id, "mine");
        assert_eq!(case.beta, reference.beta);
        assert_eq!(case.exact, reference.exact);
        assert_eq!(case.c, reference.c);
        assert!(parse_config("[case]\nfoo = 1").is_err());
        assert!(parse_config("[case]\nbeta = [1]").is_err());
    }

    #[test]
    fn case_required() {
        assert!(resolve_case(&RunConfig::default()).is_err());
    }

    #[test]
    fn sample_counts() {
        for d in 1..5 {
            assert_eq!(sample_points(ElementKind::Triangle, d).len(), d * d);
            assert_eq!(sample_points(ElementKind::Rectangle, d).len(), d * d);
        }
        assert_eq!(sample_points(ElementKind::Triangle, 1), vec![[1.0 / 3.0, 1.0 / 3.0]]);
        // every sub-triangle centroid lies strictly inside the reference triangle
        for [s, r] in sample_points(ElementKind::Triangle, 4) {
            assert!(s > 0.0 && r > 0.0 && s + r < 1.0);
        }
    }
}
