//! Browser bindings for the PD-WG solver.
//!
//! Three operations back the demo page: solve a case and sample `λ0`,
//! run a convergence study, and list mesh edges with inflow flags.

use wasm_bindgen::prelude::*;

use pdwg::cases::{builtin_case, case_ids, TestCase};
use pdwg::cli::{run_convergence, sample_solution, solve_on, RunConfig};
use pdwg::Mesh;

/// Finest level the page may request.
pub const MAX_LEVEL: u32 = 6;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn case_and_mesh(case_id: &str, level: u32) -> Result<(TestCase, Mesh), JsError> {
    if level > MAX_LEVEL {
        return Err(err(format!("level must be at most {MAX_LEVEL}")));
    }
    let case = builtin_case(case_id).map_err(err)?;
    let mesh = Mesh::at_level(case.domain, case.element_kind, level).map_err(err)?;
    Ok((case, mesh))
}

fn config(case_id: &str, k: usize, tau1: f64, tau2: f64) -> Result<RunConfig, JsError> {
    let mut cfg = RunConfig {
        case: Some(case_id.to_string()),
        tau1,
        tau2,
        ..RunConfig::default()
    };
    cfg.set_k(k).map_err(err)?;
    Ok(cfg)
}

/// Newline-separated `id<TAB>description` lines; cases with an exact
/// solution carry a trailing `<TAB>exact`.
#[wasm_bindgen]
pub fn list_cases() -> String {
    let mut out = String::new();
    for id in case_ids() {
        if let Ok(case) = builtin_case(id) {
            out.push_str(&format!("{id}\t{}", case.description));
            if case.exact.is_some() {
                out.push_str("\texact");
            }
            out.push('\n');
        }
    }
    out
}

/// Solves on `level` and returns flat `x, y, λ0` triples sampled with
/// `density` points per direction and element.
#[wasm_bindgen]
pub fn solve_samples(case_id: &str, k: usize, tau1: f64, tau2: f64, level: u32, density: usize) -> Result<Vec<f64>, JsError> {
    let cfg = config(case_id, k, tau1, tau2)?;
    if density == 0 {
        return Err(err("density must be at least 1"));
    }
    let (case, mesh) = case_and_mesh(case_id, level)?;
    let result = solve_on(mesh, &case, &cfg.params()).map_err(err)?;
    Ok(sample_solution(&result.mesh, &result.solution, density)
        .into_iter()
        .flatten()
        .collect())
}

/// Rate table CSV for levels `0..=max_level`.
#[wasm_bindgen]
pub fn convergence_csv(case_id: &str, k: usize, tau1: f64, tau2: f64, max_level: u32) -> Result<String, JsError> {
    if max_level > MAX_LEVEL {
        return Err(err(format!("level must be at most {MAX_LEVEL}")));
    }
    let mut cfg = config(case_id, k, tau1, tau2)?;
    cfg.levels = (0..=max_level).collect();
    Ok(run_convergence(&cfg).map_err(err)?.to_csv())
}

/// Flat `x0, y0, x1, y1, inflow` records, one per edge.
#[wasm_bindgen]
pub fn mesh_edges(case_id: &str, level: u32) -> Result<Vec<f64>, JsError> {
    let (case, mesh) = case_and_mesh(case_id, level)?;
    let inflow = mesh.classify_inflow(&case.beta);
    let mut out = Vec::with_capacity(5 * mesh.edges.len());
    for (i, e) in mesh.edges.iter().enumerate() {
        let [a, b] = e.coords;
        out.extend([a.x, a.y, b.x, b.y, if inflow.contains(i) { 1.0 } else { 0.0 }]);
    }
    Ok(out)
}
