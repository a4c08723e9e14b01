//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by factorizations, partitioners, and steppers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A Cholesky pivot fell at or below the tolerance `1e-14 * max(diag)`.
    #[error("matrix is not positive definite: pivot {pivot:.3e} at index {index} (tolerance {tolerance:.3e})")]
    NotPositiveDefinite {
        pivot: f64,
        index: usize,
        tolerance: f64,
    },

    /// A matrix constructor received data that is not symmetric.
    #[error("matrix entries are not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {deviation:.3e}")]
    NotSymmetric { i: usize, j: usize, deviation: f64 },

    /// Dimensions of interacting objects disagree.
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The eigenvalue iteration hit its cap without meeting the Rayleigh
    /// convergence test.
    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// The element count does not divide evenly into the requested subdomains.
    #[error("cannot partition {elements} elements into {parts} equal parts")]
    IndivisiblePartition { elements: usize, parts: usize },

    /// Forward Euler (gamma = 0) has no well-posed interface problem for the
    /// methods that constrain the primary variable.
    #[error("gamma = 0 (forward Euler) leaves the interface problem ill-posed for {method}")]
    IllPosedForwardEuler { method: &'static str },

    /// A state norm exceeded the blow-up guard (1e100) or became non-finite.
    #[error("solution diverged at t = {time:.6e} (state max {state_max:.3e})")]
    Diverged { time: f64, state_max: f64 },

    /// Gamma outside the range required by the operation.
    #[error("gamma = {gamma} outside the admissible range {range}")]
    GammaOutOfRange { gamma: f64, range: &'static str },

    /// Baumgarte parameter outside its admissible range.
    #[error("alpha = {alpha} outside the admissible range {range}")]
    AlphaOutOfRange { alpha: f64, range: &'static str },

    /// Time step must be strictly positive.
    #[error("time step dt = {dt} must be > 0")]
    InvalidTimeStep { dt: f64 },

    /// A stepper was invoked with an operator built for a different method.
    #[error("stepper for {expected} called with an operator built for {got}")]
    MethodMismatch {
        expected: &'static str,
        got: &'static str,
    },

    /// A state tagged with the wrong time level was passed to a stepper.
    #[error("state has time level {got}, expected {expected}")]
    TimeLevelMismatch {
        expected: &'static str,
        got: &'static str,
    },

    /// Partitioners only split zero body loads (plus Dirichlet fold-ins);
    /// element-wise ownership of a general load is not recoverable from the
    /// assembled nodal vector.
    #[error("partitioning a system with a nonzero body load is not supported")]
    UnsupportedForcing,
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
