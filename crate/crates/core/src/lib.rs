//! Primal-dual weak Galerkin (PD-WG) finite elements for first-order linear
//! convection problems in non-divergence form,
//!
//! ```text
//!   β·∇λ − cλ = f   in Ω,
//!           λ = g   on Γ₋ = {x ∈ ∂Ω : β·n < 0},
//! ```
//!
//! on conforming triangular and rectangular meshes, together with the
//! manufactured-solution harness used to measure convergence rates.
//!
//! The pipeline for one mesh level is
//! [`mesh`] → [`assembly::assemble_global`] → [`linsolve::factor_solve`] →
//! [`analysis::error_norms`]; [`cli::run_convergence`] drives it over a
//! sequence of uniformly refined meshes.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cases;
pub mod cli;
mod error;
pub mod linsolve;
pub mod mesh;
pub mod sparse;
pub mod weakcalc;

pub use error::{Error, Result};
pub use mesh::{Domain, ElementKind, Mesh, Point2};
