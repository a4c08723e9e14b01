//! Stability diagnostics for the coupled steppers: discrete energy
//! functionals, constraint-drift norms, critical step sizes, admissible
//! stabilization parameters, and the sequence constructions that show when
//! weighted-level boundedness does or does not control integer-level
//! boundedness.

use crate::decomp::DecomposedProblem;
use crate::error::{Error, Result};
use crate::linalg::{max_generalized_eigenvalue, SymmetricMatrix, Vector};
use crate::steppers::{CouplingMethod, CouplingState, TrapezoidalConfig, DIVERGENCE_GUARD};

/// 1-, 2-, and max-norms of one vector, reported together so drift can be
/// judged in whichever norm a bound is stated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormTriple {
    pub one: f64,
    pub two: f64,
    pub inf: f64,
}

impl NormTriple {
    pub fn of(x: &Vector) -> Self {
        NormTriple {
            one: x.norm_one(),
            two: x.norm_two(),
            inf: x.norm_inf(),
        }
    }
}

/// Per-step diagnostic record.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// Time of the primary variable (`level index * dt`).
    pub t: f64,
    /// `sum_i d_i' A_i d_i` with `A_i = M_i + (gamma - 1/2) dt K_i`.
    pub energy_d: f64,
    /// `sum_i v_i' B_i v_i`; `B_i = A_i` except for the stabilized method,
    /// where `B_i = alpha M_i + dt K_i`.
    pub energy_v: f64,
    /// Norms of the primary-variable constraint residual `sum C d`.
    pub drift_d: NormTriple,
    /// Norms of the rate constraint residual `sum C v`.
    pub drift_v: NormTriple,
    pub lambda_norm: f64,
    pub state_max: f64,
    pub diverged: bool,
}

/// Accumulates energy and drift histories for one run.
///
/// The quadratic forms use `A_i = M_i + (gamma - 1/2) dt K_i`, which is
/// positive definite whenever the step size is admissible for the chosen
/// `gamma` (always, for `gamma >= 1/2`).
#[derive(Debug, Clone)]
pub struct EnergyMonitor {
    d_ops: Vec<SymmetricMatrix>,
    v_ops: Vec<SymmetricMatrix>,
    dt: f64,
    history: Vec<StepRecord>,
}

impl EnergyMonitor {
    pub fn new(
        problem: &DecomposedProblem,
        cfg: &TrapezoidalConfig,
        method: &CouplingMethod,
    ) -> Result<Self> {
        let mut d_ops = Vec::with_capacity(problem.n_subdomains());
        let mut v_ops = Vec::with_capacity(problem.n_subdomains());
        for sub in &problem.subdomains {
            let a = SymmetricMatrix::linear_comb(1.0, &sub.m, (cfg.gamma - 0.5) * cfg.dt, &sub.k)?;
            let b = match method {
                CouplingMethod::Baumgarte { alpha } => {
                    SymmetricMatrix::linear_comb(*alpha, &sub.m, cfg.dt, &sub.k)?
                }
                _ => a.clone(),
            };
            d_ops.push(a);
            v_ops.push(b);
        }
        Ok(EnergyMonitor {
            d_ops,
            v_ops,
            dt: cfg.dt,
            history: Vec::new(),
        })
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    /// True when the given energy sequence never rises by more than
    /// `slack * max(first value, 1)` across a step.
    pub fn non_increasing(values: &[f64], slack: f64) -> bool {
        let tol = slack * values.first().copied().unwrap_or(0.0).max(1.0);
        values.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

/// Evaluate energies and drift norms for one state and append the record to
/// the monitor's history.
pub fn energy_step(
    problem: &DecomposedProblem,
    state: &CouplingState,
    monitor: &mut EnergyMonitor,
) -> StepRecord {
    let mut energy_d = 0.0;
    let mut energy_v = 0.0;
    for i in 0..problem.n_subdomains() {
        energy_d += monitor.d_ops[i].quadratic_form(&state.d[i]);
        energy_v += monitor.v_ops[i].quadratic_form(&state.v[i]);
    }
    let state_max = state.state_max();
    let record = StepRecord {
        t: state.level.index() as f64 * monitor.dt,
        energy_d,
        energy_v,
        drift_d: NormTriple::of(&problem.constraint_residual(&state.d)),
        drift_v: NormTriple::of(&problem.constraint_residual(&state.v)),
        lambda_norm: state.lambda.norm_inf(),
        state_max,
        diverged: !state.is_finite() || state_max > DIVERGENCE_GUARD,
    };
    monitor.history.push(record);
    record
}

// ── Critical step sizes and stabilization bounds ────────────────────────────

/// Largest stable step for the trapezoidal family on `M x' + K x = 0`:
/// `2 / (omega_max (1 - 2 gamma))` for `gamma < 1/2`, unbounded otherwise.
/// The stiffest generalized frequency is computed from the matrix pair.
pub fn critical_time_step(m: &SymmetricMatrix, k: &SymmetricMatrix, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let omega = max_generalized_eigenvalue(m, k)?;
    Ok(critical_time_step_from_omega(gamma, omega))
}

/// Same bound with the stiffest frequency supplied directly.
pub fn critical_time_step_from_omega(gamma: f64, omega_max: f64) -> f64 {
    if gamma >= 0.5 || omega_max == 0.0 {
        f64::INFINITY
    } else {
        2.0 / (omega_max * (1.0 - 2.0 * gamma))
    }
}

/// Largest admissible stabilization parameter: `1 / (1/2 - gamma)` for
/// `gamma < 1/2`, unbounded otherwise.
pub fn baumgarte_alpha_max(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma >= 0.5 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / (0.5 - gamma))
    }
}

/// Largest stable step for the stabilized method:
/// `alpha_star / ((1/2 - gamma) omega_max)` with
/// `alpha_star = 1 + alpha (gamma - 1/2)`, unbounded for `gamma >= 1/2`.
/// Requires `0 <= alpha <= baumgarte_alpha_max(gamma)`.
pub fn baumgarte_critical_dt(gamma: f64, alpha: f64, omega_max: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let a_max = baumgarte_alpha_max(gamma)?;
    if !(0.0..=a_max).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::AlphaOutOfRange {
            alpha,
            range: "[0, 1/(1/2 - gamma)]",
        });
    }
    if gamma >= 0.5 || omega_max == 0.0 {
        return Ok(f64::INFINITY);
    }
    let alpha_star = 1.0 + alpha * (gamma - 0.5);
    Ok(alpha_star / ((0.5 - gamma) * omega_max))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::GammaOutOfRange {
            gamma,
            range: "[0, 1]",
        });
    }
    Ok(())
}

// ── Jump/average algebra ────────────────────────────────────────────────────

/// Verify the two identities that drive the energy arguments, to relative
/// tolerance `1e-12`:
///
/// * `(1-gamma) x_n + gamma x_n1  ==  (gamma - 1/2) [x] + {x}`
/// * `{x}' S [x]  ==  (x_n1' S x_n1 - x_n' S x_n) / 2`
///
/// with jump `[x] = x_n1 - x_n` and average `{x} = (x_n + x_n1)/2`.
pub fn jump_average_identities_check(
    x_n: &[f64],
    x_n1: &[f64],
    gamma: f64,
    s: &SymmetricMatrix,
) -> bool {
    assert_eq!(x_n.len(), x_n1.len(), "operand lengths");
    assert_eq!(s.order(), x_n.len(), "matrix order");
    let n = x_n.len();
    let jump = Vector((0..n).map(|i| x_n1[i] - x_n[i]).collect());
    let avg = Vector((0..n).map(|i| 0.5 * (x_n[i] + x_n1[i])).collect());

    let mut scale_vec = 0.0_f64;
    for i in 0..n {
        let weighted = (1.0 - gamma) * x_n[i] + gamma * x_n1[i];
        let recombined = (gamma - 0.5) * jump[i] + avg[i];
        scale_vec = scale_vec.max(x_n[i].abs()).max(x_n1[i].abs());
        if (weighted - recombined).abs() > 1e-12 * scale_vec.max(1.0) {
            return false;
        }
    }

    let xn = Vector(x_n.to_vec());
    let xn1 = Vector(x_n1.to_vec());
    let cross = crate::linalg::dot(avg.as_slice(), s.matvec(&jump).as_slice());
    let telescoped = 0.5 * (s.quadratic_form(&xn1) - s.quadratic_form(&xn));
    let scale_quad = s
        .quadratic_form(&xn1)
        .abs()
        .max(s.quadratic_form(&xn).abs())
        .max(1.0);
    (cross - telescoped).abs() <= 1e-12 * scale_quad
}

// ── Weighted-level boundedness constructions ────────────────────────────────

/// Build `n_terms` of the integer-level sequence whose weighted combinations
/// `s_(n+gamma) = (1-gamma) s_n + gamma s_(n+1)` stay bounded while the
/// integer levels do not (for `gamma < 1/2`) or alternate without growing
/// (for `gamma = 1/2`). Returns `(integer_terms, weighted_terms)`;
/// the weighted list is one shorter. Requires `0 < gamma <= 1/2`.
pub fn counterexample_sequence(gamma: f64, n_terms: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(gamma > 0.0 && gamma <= 0.5) || !gamma.is_finite() {
        return Err(Error::GammaOutOfRange {
            gamma,
            range: "(0, 1/2]",
        });
    }
    assert!(n_terms >= 1, "need at least one term");
    let mut s = Vec::with_capacity(n_terms);
    let mut w = Vec::with_capacity(n_terms.saturating_sub(1));
    s.push(0.0);
    for n in 0..n_terms - 1 {
        // Prescribe the weighted value, then solve for the next integer term.
        let target = if gamma == 0.5 {
            if n % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else {
            1.0
        };
        let next = (target - (1.0 - gamma) * s[n]) / gamma;
        w.push(target);
        s.push(next);
    }
    Ok((s, w))
}

/// Reconstruct integer-level terms from weighted-level ones:
/// `s_(n+1) = (s_(n+gamma) - (1-gamma) s_n) / gamma`. For `gamma > 1/2`
/// bounded weighted input forces bounded output (contraction with ratio
/// `(1-gamma)/gamma < 1`); requires `0 < gamma <= 1`.
pub fn reconstruct_integer_sequence(
    weighted: &[f64],
    s0: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma <= 1.0) || !gamma.is_finite() {
        return Err(Error::GammaOutOfRange {
            gamma,
            range: "(0, 1]",
        });
    }
    let mut s = Vec::with_capacity(weighted.len() + 1);
    s.push(s0);
    for &w in weighted {
        let last = *s.last().unwrap();
        s.push((w - (1.0 - gamma) * last) / gamma);
    }
    Ok(s)
}

// ── Tests ───────────────────────────────────────────────────────────────────
