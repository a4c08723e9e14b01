//! Time steppers for the decomposed first-order system
//! `M_i v_i + K_i d_i = f_i + C_i' lambda` with `sum_i C_i x_i = 0`, under the
//! one-parameter trapezoidal family
//! `d_n = d_(n-1) + dt ((1-gamma) v_(n-1) + gamma v_n)`.
//!
//! Four coupling methods are provided, differing in which interface quantity
//! the multipliers enforce:
//!
//! * primary-variable continuity (`sum C d = 0`) solved at integer levels,
//! * the modified variant that balances at the intermediate level `n + gamma`
//!   and returns weighted rates and multipliers,
//! * rate continuity (`sum C v = 0`),
//! * combined rate/primary stabilization
//!   (`sum C (v + (alpha/dt) d) = 0`).
//!
//! Every stepper eliminates to one symmetric positive definite operator
//! `Mt_i = M_i + gamma dt K_i` per subdomain, solves the dense interface
//! system through a Cholesky factorization of
//! `G = sum_i C_i Mt_i^-1 C_i'`, and back-substitutes. The trapezoidal
//! relation between consecutive states holds by construction.

use crate::decomp::DecomposedProblem;
use crate::error::{Error, Result};
use crate::fem::{Forcing, SemiDiscreteSystem};
use crate::linalg::{CholeskyFactor, SymmetricMatrix, Vector};

/// Any state norm above this raises [`Error::Diverged`].
pub const DIVERGENCE_GUARD: f64 = 1e100;

// ── Configuration ───────────────────────────────────────────────────────────

/// Time integrator family member: `gamma = 0` is forward Euler, `1/2` the
/// midpoint rule, `1` backward Euler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidalConfig {
    pub gamma: f64,
    pub dt: f64,
}

impl TrapezoidalConfig {
    pub fn new(gamma: f64, dt: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
            return Err(Error::GammaOutOfRange {
                gamma,
                range: "[0, 1]",
            });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidTimeStep { dt });
        }
        Ok(TrapezoidalConfig { gamma, dt })
    }
}

/// Interface coupling method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingMethod {
    /// Enforce `sum C d = 0` at integer time levels.
    DContinuity,
    /// Enforce `sum C d = 0` with subdomain balance at level `n + gamma`;
    /// rates and multipliers live at weighted levels.
    ModifiedDContinuity,
    /// Enforce `sum C v = 0` (differentiated constraint).
    VContinuity,
    /// Enforce `sum C (v + (alpha/dt) d) = 0`.
    Baumgarte { alpha: f64 },
}

impl CouplingMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingMethod::DContinuity => "d-continuity",
            CouplingMethod::ModifiedDContinuity => "modified-d-continuity",
            CouplingMethod::VContinuity => "v-continuity",
            CouplingMethod::Baumgarte { .. } => "baumgarte",
        }
    }

    /// Methods whose interface constraint acts on the primary variable and
    /// therefore need `gamma > 0` for a well-posed interface problem.
    pub fn constrains_primary(&self) -> bool {
        matches!(
            self,
            CouplingMethod::DContinuity | CouplingMethod::ModifiedDContinuity
        )
    }

    fn validate(&self) -> Result<()> {
        if let CouplingMethod::Baumgarte { alpha } = self {
            if !(*alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::AlphaOutOfRange {
                    alpha: *alpha,
                    range: "(0, +inf)",
                });
            }
        }
        Ok(())
    }
}

// ── State ───────────────────────────────────────────────────────────────────

/// Which time level a state's fields occupy.
///
/// `Integer(n)`: all of `(d, v, lambda)` sit at step `n`.
/// `Weighted(n)`: `d` sits at step `n` while `(v, lambda)` sit at the
/// intermediate level `n - 1 + gamma` (modified method bookkeeping).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeLevel {
    Integer(usize),
    Weighted(usize),
}

impl TimeLevel {
    /// The integer step index of the primary variable.
    pub fn index(&self) -> usize {
        match self {
            TimeLevel::Integer(n) | TimeLevel::Weighted(n) => *n,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            TimeLevel::Integer(_) => "integer",
            TimeLevel::Weighted(_) => "weighted",
        }
    }
}

/// Snapshot of the decomposed solution: per-subdomain primary values and
/// rates plus the interface multipliers.
#[derive(Debug, Clone)]
pub struct CouplingState {
    pub d: Vec<Vector>,
    pub v: Vec<Vector>,
    pub lambda: Vector,
    pub level: TimeLevel,
}

impl CouplingState {
    /// Largest absolute entry across all fields.
    pub fn state_max(&self) -> f64 {
        let mut m = self.lambda.norm_inf();
        for x in self.d.iter().chain(self.v.iter()) {
            m = m.max(x.norm_inf());
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.lambda.is_finite() && self.d.iter().all(Vector::is_finite) && self.v.iter().all(Vector::is_finite)
    }

    fn check_dims(&self, problem: &DecomposedProblem) {
        assert_eq!(self.d.len(), problem.n_subdomains(), "d blocks");
        assert_eq!(self.v.len(), problem.n_subdomains(), "v blocks");
        assert_eq!(self.lambda.len(), problem.n_constraints, "multiplier length");
        for (i, sub) in problem.subdomains.iter().enumerate() {
            assert_eq!(self.d[i].len(), sub.n_local(), "d block {i} length");
            assert_eq!(self.v[i].len(), sub.n_local(), "v block {i} length");
        }
    }
}

// ── Interface operator ──────────────────────────────────────────────────────

/// Factored interface machinery reused across steps: per-subdomain
/// factorizations of `Mt_i = M_i + gamma dt K_i`, the columns
/// `Mt_i^-1 e_c` for every constrained local unknown, and the Cholesky
/// factor of the dual operator `G`.
#[derive(Debug, Clone)]
pub struct SchurOperator {
    pub cfg: TrapezoidalConfig,
    pub method: CouplingMethod,
    mt_factors: Vec<CholeskyFactor>,
    /// Per subdomain, `(local col, Mt^-1 e_col)` sorted by column.
    w_cols: Vec<Vec<(usize, Vector)>>,
    g_factor: CholeskyFactor,
}

/// Factor the per-subdomain operators and the dense dual interface operator
/// for the given method.
///
/// Fails with [`Error::IllPosedForwardEuler`] for `gamma = 0` under the
/// primary-variable methods and with [`Error::NotPositiveDefinite`] when the
/// constraint rows are linearly dependent.
pub fn build_schur(
    problem: &DecomposedProblem,
    cfg: TrapezoidalConfig,
    method: CouplingMethod,
) -> Result<SchurOperator> {
    method.validate()?;
    if cfg.gamma == 0.0 && method.constrains_primary() {
        return Err(Error::IllPosedForwardEuler {
            method: method.name(),
        });
    }
    let factors: Vec<CholeskyFactor> = problem
        .subdomains
        .iter()
        .map(|sub| {
            SymmetricMatrix::linear_comb(1.0, &sub.m, cfg.gamma * cfg.dt, &sub.k)?.cholesky_factor()
        })
        .collect::<Result<_>>()?;
    let (w_cols, g) = assemble_dual_operator(problem, &factors)?;
    let g_factor = g.cholesky_factor()?;
    Ok(SchurOperator {
        cfg,
        method,
        mt_factors: factors,
        w_cols,
        g_factor,
    })
}

/// Solve the per-subdomain columns `F^-1 e_c` for every constrained local
/// unknown and accumulate the dual operator `G = sum_i C_i F_i^-1 C_i'`.
fn assemble_dual_operator(
    problem: &DecomposedProblem,
    factors: &[CholeskyFactor],
) -> Result<(Vec<Vec<(usize, Vector)>>, SymmetricMatrix)> {
    let nc = problem.n_constraints;
    let mut g_full = vec![vec![0.0; nc]; nc];
    let mut all_cols = Vec::with_capacity(problem.n_subdomains());
    for (sub, factor) in problem.subdomains.iter().zip(factors) {
        let entries = sub.c.entries();
        let mut cols: Vec<usize> = entries.iter().map(|&(_, c, _)| c).collect();
        cols.sort_unstable();
        cols.dedup();
        let w: Vec<(usize, Vector)> = cols
            .into_iter()
            .map(|c| {
                let mut e = Vector::zeros(sub.n_local());
                e[c] = 1.0;
                factor.solve_in_place(&mut e);
                (c, e)
            })
            .collect();
        for &(r1, c1, s1) in entries {
            for &(r2, c2, s2) in entries {
                let at = w.binary_search_by_key(&c2, |&(c, _)| c).unwrap();
                g_full[r1][r2] += s1 * s2 * w[at].1[c1];
            }
        }
        all_cols.push(w);
    }
    let g = SymmetricMatrix::from_rows(&g_full)?;
    Ok((all_cols, g))
}

impl SchurOperator {
    /// `out += Mt^-1 C' lambda` for one subdomain.
    fn add_w_lambda(&self, i: usize, lambda: &Vector, entries: &[(usize, usize, f64)], out: &mut Vector) {
        let w = &self.w_cols[i];
        for &(r, c, s) in entries {
            let at = w.binary_search_by_key(&c, |&(cc, _)| cc).unwrap();
            out.axpy(s * lambda[r], &w[at].1);
        }
    }
}

// ── Shared step pieces ──────────────────────────────────────────────────────

fn guard(state: CouplingState, time: f64) -> Result<CouplingState> {
    let state_max = state.state_max();
    if !state.is_finite() || state_max > DIVERGENCE_GUARD {
        return Err(Error::Diverged { time, state_max });
    }
    Ok(state)
}

fn integer_level_of(state: &CouplingState) -> Result<usize> {
    match state.level {
        TimeLevel::Integer(n) => Ok(n),
        TimeLevel::Weighted(_) => Err(Error::TimeLevelMismatch {
            expected: "integer",
            got: state.level.kind(),
        }),
    }
}

fn expect_method(op: &SchurOperator, expected: &'static str) -> Result<()> {
    if op.method.name() != expected {
        return Err(Error::MethodMismatch {
            expected,
            got: op.method.name(),
        });
    }
    Ok(())
}

/// One integer-level step shared by the three methods that solve for the
/// state at `n + 1` directly. The methods differ only in the interface
/// right-hand side added to `-sum C h`.
fn step_integer_level(
    state: &CouplingState,
    problem: &DecomposedProblem,
    op: &SchurOperator,
) -> Result<CouplingState> {
    state.check_dims(problem);
    let n = integer_level_of(state)?;
    let (gamma, dt) = (op.cfg.gamma, op.cfg.dt);
    let t_next = (n + 1) as f64 * dt;
    let ns = problem.n_subdomains();

    // a_i = d_i + (1 - gamma) dt v_i, then h_i = Mt_i^-1 (f_i - K_i a_i).
    let mut a = Vec::with_capacity(ns);
    let mut h = Vec::with_capacity(ns);
    for (i, sub) in problem.subdomains.iter().enumerate() {
        let mut ai = state.d[i].clone();
        ai.axpy((1.0 - gamma) * dt, &state.v[i]);
        let mut rhs = sub.k.matvec(&ai);
        rhs.scale(-1.0);
        if let Some(f) = sub.forcing.eval(t_next) {
            rhs.axpy(1.0, &f);
        }
        op.mt_factors[i].solve_in_place(&mut rhs);
        a.push(ai);
        h.push(rhs);
    }

    // Interface right-hand side per method, then lambda = G^-1 (g - sum C h).
    let mut r = match op.method {
        CouplingMethod::DContinuity => {
            let mut g = problem.constraint_residual(&a);
            g.scale(-1.0 / (gamma * dt));
            g
        }
        CouplingMethod::VContinuity => Vector::zeros(problem.n_constraints),
        CouplingMethod::Baumgarte { alpha } => {
            let mut g = problem.constraint_residual(&a);
            g.scale(-(alpha / dt) / (1.0 + alpha * gamma));
            g
        }
        CouplingMethod::ModifiedDContinuity => unreachable!("dispatched separately"),
    };
    let ch = problem.constraint_residual(&h);
    r.axpy(-1.0, &ch);
    let lambda = op.g_factor.solve(&r);

    // Back-substitute: v = h + Mt^-1 C' lambda, d = a + gamma dt v.
    let mut v_new = Vec::with_capacity(ns);
    let mut d_new = Vec::with_capacity(ns);
    for (i, sub) in problem.subdomains.iter().enumerate() {
        let mut vi = h[i].clone();
        op.add_w_lambda(i, &lambda, sub.c.entries(), &mut vi);
        let mut di = a[i].clone();
        di.axpy(gamma * dt, &vi);
        v_new.push(vi);
        d_new.push(di);
    }

    guard(
        CouplingState {
            d: d_new,
            v: v_new,
            lambda,
            level: TimeLevel::Integer(n + 1),
        },
        t_next,
    )
}

// ── Public steppers ─────────────────────────────────────────────────────────

/// Advance one step enforcing `sum C d = 0` at the new integer level.
pub fn step_d_continuity(
    state: &CouplingState,
    problem: &DecomposedProblem,
    op: &SchurOperator,
) -> Result<CouplingState> {
    expect_method(op, "d-continuity")?;
    step_integer_level(state, problem, op)
}

/// Advance one step enforcing `sum C v = 0` at the new integer level.
pub fn step_v_continuity(
    state: &CouplingState,
    problem: &DecomposedProblem,
    op: &SchurOperator,
) -> Result<CouplingState> {
    expect_method(op, "v-continuity")?;
    step_integer_level(state, problem, op)
}

/// Advance one step enforcing `sum C (v + (alpha/dt) d) = 0` at the new
/// integer level.
pub fn step_baumgarte(
    state: &CouplingState,
    problem: &DecomposedProblem,
    op: &SchurOperator,
) -> Result<CouplingState> {
    expect_method(op, "baumgarte")?;
    step_integer_level(state, problem, op)
}

/// Advance one step of the modified primary-continuity method: subdomain
/// balance holds at level `k + gamma`, the new primary values satisfy
/// `sum C d = 0`, and the returned rates and multipliers sit at the weighted
/// level `k + gamma`.
///
/// Accepts a state whose `d` sits at step `k` (integer or weighted tag) and
/// ignores the incoming rates; the recurrence is driven by `d` alone.
pub fn step_modified_d_continuity(
    state: &CouplingState,
    problem: &DecomposedProblem,
    op: &SchurOperator,
) -> Result<CouplingState> {
    expect_method(op, "modified-d-continuity")?;
    state.check_dims(problem);
    let k = state.level.index();
    let (gamma, dt) = (op.cfg.gamma, op.cfg.dt);
    let (t_k, t_next) = (k as f64 * dt, (k + 1) as f64 * dt);
    let ns = problem.n_subdomains();

    // h_i = Mt_i^-1 [ (1/dt) M_i d_i - (1 - gamma) K_i d_i + f_i^(k+gamma) ]
    // with the weighted load f^(k+gamma) = (1-gamma) f(t_k) + gamma f(t_k+1).
    let mut h = Vec::with_capacity(ns);
    for (i, sub) in problem.subdomains.iter().enumerate() {
        let md = sub.m.matvec(&state.d[i]);
        let kd = sub.k.matvec(&state.d[i]);
        let mut rhs = Vector::zeros(sub.n_local());
        rhs.axpy(1.0 / dt, &md);
        rhs.axpy(-(1.0 - gamma), &kd);
        if let Some(f) = sub.forcing.eval(t_k) {
            rhs.axpy(1.0 - gamma, &f);
        }
        if let Some(f) = sub.forcing.eval(t_next) {
            rhs.axpy(gamma, &f);
        }
        op.mt_factors[i].solve_in_place(&mut rhs);
        h.push(rhs);
    }

    // G lambda = -sum C h, then d_new = dt (h + Mt^-1 C' lambda) and the
    // weighted rate v = (d_new - d)/dt.
    let mut r = problem.constraint_residual(&h);
    r.scale(-1.0);
    let lambda = op.g_factor.solve(&r);

    let mut v_new = Vec::with_capacity(ns);
    let mut d_new = Vec::with_capacity(ns);
    for (i, sub) in problem.subdomains.iter().enumerate() {
        let mut di = h[i].clone();
        op.add_w_lambda(i, &lambda, sub.c.entries(), &mut di);
        di.scale(dt);
        let mut vi = di.clone();
        vi.axpy(-1.0, &state.d[i]);
        vi.scale(1.0 / dt);
        v_new.push(vi);
        d_new.push(di);
    }

    guard(
        CouplingState {
            d: d_new,
            v: v_new,
            lambda,
            level: TimeLevel::Weighted(k + 1),
        },
        t_next,
    )
}

/// Dispatch on the operator's method.
pub fn step_coupling(
    state: &CouplingState,
    problem: &DecomposedProblem,
    op: &SchurOperator,
) -> Result<CouplingState> {
    match op.method {
        CouplingMethod::ModifiedDContinuity => step_modified_d_continuity(state, problem, op),
        _ => step_integer_level(state, problem, op),
    }
}

// ── Level interpolation ─────────────────────────────────────────────────────

/// Integer-level rates and multipliers for the modified method, produced one
/// step behind: combining the weighted records at `k - 1 + gamma` (carried
/// by `prev`) and `k + gamma` (carried by `curr`) with weights
/// `(gamma, 1 - gamma)` yields the values at integer step `k`.
pub fn interpolate_integer_levels(
    prev: &CouplingState,
    curr: &CouplingState,
    gamma: f64,
) -> Result<(Vec<Vector>, Vector)> {
    let ok = matches!(
        (prev.level, curr.level),
        (TimeLevel::Weighted(a), TimeLevel::Weighted(b)) if b == a + 1
    );
    if !ok {
        return Err(Error::TimeLevelMismatch {
            expected: "consecutive weighted levels",
            got: prev.level.kind(),
        });
    }
    let v_int = prev
        .v
        .iter()
        .zip(&curr.v)
        .map(|(p, c)| interpolate_weighted_level(c, p, gamma))
        .collect();
    let lambda_int = interpolate_weighted_level(&curr.lambda, &prev.lambda, gamma);
    Ok((v_int, lambda_int))
}

/// Convex combination `(1 - gamma) x_n + gamma x_n1`: the value at level
/// `n + gamma` between two integer-level records (also the inverse map used
/// by [`interpolate_integer_levels`] with its arguments swapped).
pub fn interpolate_weighted_level(x_n: &Vector, x_n1: &Vector, gamma: f64) -> Vector {
    assert_eq!(x_n.len(), x_n1.len(), "interpolation operand lengths");
    Vector(
        x_n.iter()
            .zip(x_n1.iter())
            .map(|(a, b)| (1.0 - gamma) * a + gamma * b)
            .collect(),
    )
}

// ── Initialization ──────────────────────────────────────────────────────────

/// Rate-consistent initial state: solves
/// `M_i v_i = f_i(0) - K_i d_i + C_i' lambda` with `sum C v = 0`, so the
/// initial data satisfy both the balance and the differentiated constraint.
pub fn initial_state(problem: &DecomposedProblem) -> Result<CouplingState> {
    let d0 = problem.initial_d();
    let factors: Vec<CholeskyFactor> = problem
        .subdomains
        .iter()
        .map(|sub| sub.m.cholesky_factor())
        .collect::<Result<_>>()?;
    let (w_cols, g) = assemble_dual_operator(problem, &factors)?;
    let g_factor = g.cholesky_factor()?;

    let mut h = Vec::with_capacity(problem.n_subdomains());
    for (i, sub) in problem.subdomains.iter().enumerate() {
        let mut rhs = sub.k.matvec(&d0[i]);
        rhs.scale(-1.0);
        if let Some(f) = sub.forcing.eval(0.0) {
            rhs.axpy(1.0, &f);
        }
        factors[i].solve_in_place(&mut rhs);
        h.push(rhs);
    }
    let mut r = problem.constraint_residual(&h);
    r.scale(-1.0);
    let lambda = g_factor.solve(&r);

    let mut v0 = Vec::with_capacity(problem.n_subdomains());
    for (i, sub) in problem.subdomains.iter().enumerate() {
        let mut vi = h[i].clone();
        for &(row, c, s) in sub.c.entries() {
            let at = w_cols[i].binary_search_by_key(&c, |&(cc, _)| cc).unwrap();
            vi.axpy(s * lambda[row], &w_cols[i][at].1);
        }
        v0.push(vi);
    }
    Ok(CouplingState {
        d: d0,
        v: v0,
        lambda,
        level: TimeLevel::Integer(0),
    })
}

// ── Monolithic reference ────────────────────────────────────────────────────

/// Undecomposed trapezoidal stepper with the factorization cached.
#[derive(Debug, Clone)]
pub struct MonolithicStepper {
    cfg: TrapezoidalConfig,
    k: SymmetricMatrix,
    forcing: Forcing,
    mt_factor: CholeskyFactor,
}

impl MonolithicStepper {
    pub fn new(system: &SemiDiscreteSystem, cfg: TrapezoidalConfig) -> Result<Self> {
        let mt = SymmetricMatrix::linear_comb(1.0, &system.m, cfg.gamma * cfg.dt, &system.k)?;
        Ok(MonolithicStepper {
            cfg,
            k: system.k.clone(),
            forcing: system.forcing.clone(),
            mt_factor: mt.cholesky_factor()?,
        })
    }

    /// Advance `(d, v)` from step `n` to `n + 1`.
    pub fn step(&self, d: &Vector, v: &Vector, n: usize) -> Result<(Vector, Vector)> {
        let (gamma, dt) = (self.cfg.gamma, self.cfg.dt);
        let t_next = (n + 1) as f64 * dt;
        let mut a = d.clone();
        a.axpy((1.0 - gamma) * dt, v);
        let mut rhs = self.k.matvec(&a);
        rhs.scale(-1.0);
        if let Some(f) = self.forcing.eval(t_next) {
            rhs.axpy(1.0, &f);
        }
        self.mt_factor.solve_in_place(&mut rhs);
        let v_new = rhs;
        let mut d_new = a;
        d_new.axpy(gamma * dt, &v_new);
        let state_max = d_new.norm_inf().max(v_new.norm_inf());
        if !(d_new.is_finite() && v_new.is_finite()) || state_max > DIVERGENCE_GUARD {
            return Err(Error::Diverged {
                time: t_next,
                state_max,
            });
        }
        Ok((d_new, v_new))
    }
}

/// One undecomposed trapezoidal step (convenience wrapper that factors the
/// operator on every call; use [`MonolithicStepper`] in loops).
pub fn step_monolithic(
    system: &SemiDiscreteSystem,
    cfg: TrapezoidalConfig,
    d: &Vector,
    v: &Vector,
    n: usize,
) -> Result<(Vector, Vector)> {
    MonolithicStepper::new(system, cfg)?.step(d, v, n)
}

/// Rate consistent with the balance at `t = 0`: `v = M^-1 (f(0) - K d0)`.
pub fn initial_velocity_monolithic(system: &SemiDiscreteSystem) -> Result<Vector> {
    let mut rhs = system.k.matvec(&system.initial);
    rhs.scale(-1.0);
    if let Some(f) = system.forcing.eval(0.0) {
        rhs.axpy(1.0, &f);
    }
    let factor = system.m.cholesky_factor()?;
    factor.solve_in_place(&mut rhs);
    Ok(rhs)
}

// ── Tests ───────────────────────────────────────────────────────────────────
