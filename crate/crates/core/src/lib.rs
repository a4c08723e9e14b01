//! Dual-interface domain-decomposition solvers for linear first-order
//! transient systems.
//!
//! The library couples subdomain systems `M_i v_i + K_i d_i = f_i` through
//! signed Boolean constraints `sum_i C_i x_i = 0` enforced by Lagrange
//! multipliers, integrates them with the one-parameter trapezoidal family,
//! and provides the analysis tools — energy functionals, constraint-drift
//! norms, critical step sizes, stabilization bounds, and closed-form
//! reference solutions — needed to study how the choice of constrained
//! quantity (primary variable, rate, or a stabilized combination) interacts
//! with the integrator parameter.
//!
//! Module map:
//!
//! * [`linalg`] — dense symmetric storage, Cholesky factorization, and a
//!   seeded power iteration for the stiffest generalized frequency;
//! * [`fem`] — 1D linear and 2D bilinear element assembly, boundary-value
//!   elimination, and L2 error integration;
//! * [`decomp`] — splitting an assembled system into constrained subdomains
//!   and building the dual interface operator;
//! * [`steppers`] — the four coupling methods plus a monolithic reference;
//! * [`stability`] — energy/drift monitoring, step-size and stabilization
//!   bounds, and the weighted-level boundedness constructions;
//! * [`analytic`] — closed-form solutions for the desk-scale experiments.

pub mod analytic;
pub mod decomp;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod stability;
pub mod steppers;

pub use analytic::{
    heat1d_mixed_series, heat1d_neumann, heat2d_neumann, split_dof_exact, AnalyticSolution,
};
pub use decomp::{
    interface_operator, partition_1d, partition_2d, verify_independence, DecomposedProblem,
    SignedBooleanMatrix, Subdomain,
};
pub use error::{Error, Result};
pub use fem::{
    assemble_1d, assemble_2d, l2_error_1d, l2_error_2d, Forcing, Material, Mesh1D, Mesh2D,
    SemiDiscreteSystem,
};
pub use linalg::{
    max_generalized_eigenvalue, max_generalized_eigenvalue_seeded, CholeskyFactor,
    SymmetricMatrix, Vector, EIGEN_DEFAULT_SEED,
};
pub use stability::{
    baumgarte_alpha_max, baumgarte_critical_dt, counterexample_sequence, critical_time_step,
    critical_time_step_from_omega, energy_step, jump_average_identities_check,
    reconstruct_integer_sequence, EnergyMonitor, NormTriple, StepRecord,
};
pub use steppers::{
    build_schur, initial_state, initial_velocity_monolithic, interpolate_integer_levels,
    interpolate_weighted_level, step_baumgarte, step_coupling, step_d_continuity,
    step_modified_d_continuity, step_monolithic, step_v_continuity, CouplingMethod,
    CouplingState, MonolithicStepper, SchurOperator, TimeLevel, TrapezoidalConfig,
    DIVERGENCE_GUARD,
};
