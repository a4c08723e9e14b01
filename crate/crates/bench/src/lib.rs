//! Benchmark-only crate; see `benches/solver.rs`. Shared fixtures live here
//! so the bench target stays small.

use ddsolve_cli::experiments::{heat1d_problem, heat2d_problem};
use ddsolve_core::decomp::DecomposedProblem;
use ddsolve_core::fem::Material;

pub fn unit_material() -> Material {
    Material {
        conductivity: 1.0,
        capacity: 1.0,
    }
}

/// Two-subdomain bar problem with the given per-subdomain element count.
pub fn bar_problem(elems_per_sub: usize) -> DecomposedProblem {
    let (_, _, problem) = heat1d_problem(elems_per_sub, &unit_material()).unwrap();
    problem
}

/// Four-subdomain square problem with the given per-subdomain mesh size.
pub fn square_problem(elems_per_sub: usize) -> DecomposedProblem {
    let (_, _, problem) = heat2d_problem(elems_per_sub, &unit_material()).unwrap();
    problem
}
