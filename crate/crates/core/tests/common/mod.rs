//! Shared test infrastructure: an independent dense oracle for one coupled
//! step and a deterministic random-problem generator.
//!
//! The oracle assembles the full stacked linear system for a single step —
//! every balance row, every update row, every constraint row — and solves it
//! with plain Gaussian elimination. It shares no code with the production
//! interface-elimination path, so agreement between the two is meaningful.
#![allow(dead_code)]

use std::sync::Arc;

use ddsolve_core::decomp::{DecomposedProblem, SignedBooleanMatrix, Subdomain};
use ddsolve_core::fem::{Forcing, SemiDiscreteSystem};
use ddsolve_core::linalg::{SymmetricMatrix, Vector};
use ddsolve_core::steppers::{CouplingMethod, CouplingState, TimeLevel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ── Dense linear algebra (independent of the library's packed storage) ──────

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        assert!(
            a[pivot_row][col].abs() > 1e-300,
            "singular stacked system at column {col}"
        );
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

pub fn dense_of(s: &SymmetricMatrix) -> Vec<Vec<f64>> {
    let n = s.order();
    (0..n)
        .map(|i| (0..n).map(|j| s.get(i, j)).collect())
        .collect()
}

// ── Stacked one-step systems ────────────────────────────────────────────────

/// Oracle result for one step: per-subdomain primary and rate values plus the
/// interface multipliers. For the modified method these are the end-of-step
/// primary values and the weighted-level rates/multipliers.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub d: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    /// Infinity norm of the whole stacked solution vector.
    pub scale: f64,
}

fn forcing_dense(sub: &Subdomain, t: f64) -> Vec<f64> {
    match sub.forcing.eval(t) {
        Some(v) => v.0.clone(),
        None => vec![0.0; sub.m.order()],
    }
}

/// Assemble and solve the full system for one integer-level step.
///
/// Unknowns `[d_1 .. d_S, v_1 .. v_S, lambda]`; equations are each
/// subdomain's balance at the new time, the trapezoidal update, and the
/// interface constraint at the new time.
pub fn oracle_integer_step(
    problem: &DecomposedProblem,
    d0: &[Vec<f64>],
    v0: &[Vec<f64>],
    gamma: f64,
    dt: f64,
    method: CouplingMethod,
    step_index: usize,
) -> OracleSolution {
    let n_sub = problem.subdomains.len();
    let sizes: Vec<usize> = problem.subdomains.iter().map(|s| s.m.order()).collect();
    let total: usize = sizes.iter().sum();
    let nc = problem.n_constraints;
    let dim = 2 * total + nc;
    let off_d: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let here = *acc;
            *acc += s;
            Some(here)
        })
        .collect();
    let off_v: Vec<usize> = off_d.iter().map(|o| o + total).collect();
    let off_l = 2 * total;
    let t_next = (step_index + 1) as f64 * dt;

    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];

    for (i, sub) in problem.subdomains.iter().enumerate() {
        let m = dense_of(&sub.m);
        let k = dense_of(&sub.k);
        let f = forcing_dense(sub, t_next);
        for r in 0..sizes[i] {
            // Balance: M v + K d - C' lambda = f(t_next).
            let row = off_d[i] + r;
            for c in 0..sizes[i] {
                a[row][off_v[i] + c] += m[r][c];
                a[row][off_d[i] + c] += k[r][c];
            }
            for &(cr, cc, s) in sub.c.entries() {
                if cc == r {
                    a[row][off_l + cr] -= s;
                }
            }
            b[row] = f[r];
            // Update: d - gamma dt v = d0 + (1 - gamma) dt v0.
            let row = off_v[i] + r;
            a[row][off_d[i] + r] += 1.0;
            a[row][off_v[i] + r] -= gamma * dt;
            b[row] = d0[i][r] + (1.0 - gamma) * dt * v0[i][r];
        }
        // Constraint rows.
        for &(cr, cc, s) in sub.c.entries() {
            match method {
                CouplingMethod::DContinuity => a[off_l + cr][off_d[i] + cc] += s,
                CouplingMethod::VContinuity => a[off_l + cr][off_v[i] + cc] += s,
                CouplingMethod::Baumgarte { alpha } => {
                    a[off_l + cr][off_v[i] + cc] += s;
                    a[off_l + cr][off_d[i] + cc] += s * alpha / dt;
                }
                CouplingMethod::ModifiedDContinuity => {
                    panic!("use oracle_modified_step for the modified method")
                }
            }
        }
    }

    let x = solve_dense(a, b);
    split_solution(&x, &sizes, off_l, nc, n_sub, &off_d, &off_v)
}

/// Assemble and solve the full system for one modified-method step.
///
/// Unknowns `[d_1 .. d_S, vw_1 .. vw_S, lambda_w]`; equations are the
/// weighted-level balance (with the convex-combination load), the whole-step
/// update `d_new = d_old + dt vw`, and the end-of-step constraint.
pub fn oracle_modified_step(
    problem: &DecomposedProblem,
    d0: &[Vec<f64>],
    gamma: f64,
    dt: f64,
    step_index: usize,
) -> OracleSolution {
    let n_sub = problem.subdomains.len();
    let sizes: Vec<usize> = problem.subdomains.iter().map(|s| s.m.order()).collect();
    let total: usize = sizes.iter().sum();
    let nc = problem.n_constraints;
    let dim = 2 * total + nc;
    let off_d: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let here = *acc;
            *acc += s;
            Some(here)
        })
        .collect();
    let off_v: Vec<usize> = off_d.iter().map(|o| o + total).collect();
    let off_l = 2 * total;
    let t_k = step_index as f64 * dt;
    let t_next = (step_index + 1) as f64 * dt;

    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];

    for (i, sub) in problem.subdomains.iter().enumerate() {
        let m = dense_of(&sub.m);
        let k = dense_of(&sub.k);
        let f_k = forcing_dense(sub, t_k);
        let f_next = forcing_dense(sub, t_next);
        for r in 0..sizes[i] {
            // Weighted balance: M vw + gamma K d_new - C' lambda_w
            //   = (1-gamma) f(t_k) + gamma f(t_next) - (1-gamma) K d_old.
            let row = off_d[i] + r;
            for c in 0..sizes[i] {
                a[row][off_v[i] + c] += m[r][c];
                a[row][off_d[i] + c] += gamma * k[r][c];
            }
            for &(cr, cc, s) in sub.c.entries() {
                if cc == r {
                    a[row][off_l + cr] -= s;
                }
            }
            let mut rhs = (1.0 - gamma) * f_k[r] + gamma * f_next[r];
            for c in 0..sizes[i] {
                rhs -= (1.0 - gamma) * k[r][c] * d0[i][c];
            }
            b[row] = rhs;
            // Update: d_new - dt vw = d_old.
            let row = off_v[i] + r;
            a[row][off_d[i] + r] += 1.0;
            a[row][off_v[i] + r] -= dt;
            b[row] = d0[i][r];
        }
        for &(cr, cc, s) in sub.c.entries() {
            a[off_l + cr][off_d[i] + cc] += s;
        }
    }

    let x = solve_dense(a, b);
    split_solution(&x, &sizes, off_l, nc, n_sub, &off_d, &off_v)
}

fn split_solution(
    x: &[f64],
    sizes: &[usize],
    off_l: usize,
    nc: usize,
    n_sub: usize,
    off_d: &[usize],
    off_v: &[usize],
) -> OracleSolution {
    let scale = x.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    OracleSolution {
        d: (0..n_sub)
            .map(|i| x[off_d[i]..off_d[i] + sizes[i]].to_vec())
            .collect(),
        v: (0..n_sub)
            .map(|i| x[off_v[i]..off_v[i] + sizes[i]].to_vec())
            .collect(),
        lambda: x[off_l..off_l + nc].to_vec(),
        scale,
    }
}

// ── Deterministic random problems ───────────────────────────────────────────

/// One randomly generated coupled step problem (deterministic in the seed).
pub struct RandomCase {
    pub problem: DecomposedProblem,
    pub state: CouplingState,
    pub gamma: f64,
    pub dt: f64,
    pub method: CouplingMethod,
    /// Integer time level of the input state.
    pub step_index: usize,
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymmetricMatrix {
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let shift = rng.gen_range(0.5..1.5);
    gram(&b, n, shift)
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymmetricMatrix {
    // Possibly rank-deficient, like a conductance matrix with free modes.
    let rank = rng.gen_range(1..=n);
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..rank).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    gram(&b, rank, 0.0)
}

fn gram(b: &[Vec<f64>], inner: usize, shift: f64) -> SymmetricMatrix {
    let n = b.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dot: f64 = (0..inner).map(|k| b[i][k] * b[j][k]).sum();
                    dot + if i == j { shift } else { 0.0 }
                })
                .collect()
        })
        .collect();
    SymmetricMatrix::from_rows(&rows).expect("gram matrix is symmetric")
}

fn random_forcing(rng: &mut ChaCha8Rng, n: usize) -> Forcing {
    match rng.gen_range(0..3) {
        0 => Forcing::Zero,
        1 => Forcing::Constant(Vector(
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )),
        _ => {
            let base: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let slope: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Forcing::TimeVarying(Arc::new(move |t| {
                Vector(
                    base.iter()
                        .zip(&slope)
                        .map(|(b, s)| b + t * s)
                        .collect(),
                )
            }))
        }
    }
}

/// Build a random decomposed problem with 2-3 subdomains of 1-3 unknowns
/// each (at most 6 total) and 1-2 chained signed-Boolean constraints, plus a
/// random input state at an integer level and a random method/parameter draw.
pub fn random_case(seed: u64) -> RandomCase {
    random_case_forced(seed, None)
}

/// Like [`random_case`] but with the method fixed (0 = primary continuity,
/// 1 = modified, 2 = rate continuity, 3 = stabilized combination). The rest
/// of the draw is unchanged for a given seed.
pub fn random_case_forced(seed: u64, force: Option<u8>) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_sub = rng.gen_range(2..=3);
    let sizes: Vec<usize> = loop {
        let draw: Vec<usize> = (0..n_sub).map(|_| rng.gen_range(1..=3)).collect();
        if draw.iter().sum::<usize>() <= 6 {
            break draw;
        }
    };

    // Chain constraints along a path of distinct (subdomain, unknown) slots;
    // consecutive slots sit in different subdomains, so every row ties two
    // subdomains and the rows stay linearly independent.
    let want_rows = rng.gen_range(1..=2);
    let mut slots: Vec<(usize, usize)> = Vec::new();
    let mut used = std::collections::HashSet::new();
    for _ in 0..=want_rows {
        let prev_sub = slots.last().map(|&(s, _)| s);
        let mut placed = false;
        for _attempt in 0..50 {
            let sub = rng.gen_range(0..n_sub);
            if Some(sub) == prev_sub {
                continue;
            }
            let dof = rng.gen_range(0..sizes[sub]);
            if used.insert((sub, dof)) {
                slots.push((sub, dof));
                placed = true;
                break;
            }
        }
        if !placed {
            break;
        }
    }
    let nc = slots.len() - 1;
    assert!(nc >= 1, "generator must produce at least one constraint");

    let mut c_blocks: Vec<SignedBooleanMatrix> = sizes
        .iter()
        .map(|&s| SignedBooleanMatrix::new(nc, s))
        .collect();
    for (row, pair) in slots.windows(2).enumerate() {
        let (sub_a, dof_a) = pair[0];
        let (sub_b, dof_b) = pair[1];
        // The lower-indexed subdomain carries the positive sign.
        let (pos, neg) = if sub_a < sub_b {
            ((sub_a, dof_a), (sub_b, dof_b))
        } else {
            ((sub_b, dof_b), (sub_a, dof_a))
        };
        c_blocks[pos.0].set_entry(row, pos.1, 1.0);
        c_blocks[neg.0].set_entry(row, neg.1, -1.0);
    }

    let mut subdomains = Vec::with_capacity(n_sub);
    let mut next_global = 0usize;
    for (i, &sz) in sizes.iter().enumerate() {
        let local_to_global: Vec<usize> = (next_global..next_global + sz).collect();
        next_global += sz;
        subdomains.push(Subdomain {
            m: random_spd(&mut rng, sz),
            k: random_psd(&mut rng, sz),
            forcing: random_forcing(&mut rng, sz),
            local_to_global,
            c: c_blocks[i].clone(),
        });
    }
    let total = next_global;
    // Placeholder single-domain view; the coupled step never reads it.
    let global = SemiDiscreteSystem::from_reduced(
        SymmetricMatrix::scaled_identity(total, 1.0),
        SymmetricMatrix::scaled_identity(total, 0.0),
        Forcing::Zero,
        Vector::zeros(total),
    );
    let problem = DecomposedProblem {
        subdomains,
        n_constraints: nc,
        global,
    };

    let drawn: u8 = rng.gen_range(0..4);
    let alpha = rng.gen_range(0.1..5.0);
    let method = match force.unwrap_or(drawn) {
        0 => CouplingMethod::DContinuity,
        1 => CouplingMethod::ModifiedDContinuity,
        2 => CouplingMethod::VContinuity,
        _ => CouplingMethod::Baumgarte { alpha },
    };
    let gamma = match method {
        CouplingMethod::DContinuity | CouplingMethod::ModifiedDContinuity => {
            rng.gen_range(0.05..=1.0)
        }
        _ => rng.gen_range(0.0..=1.0),
    };
    let dt = 10f64.powf(rng.gen_range(-3.0..-1.0));
    let step_index = rng.gen_range(0..3);

    let d: Vec<Vector> = sizes
        .iter()
        .map(|&s| Vector((0..s).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    let v: Vec<Vector> = sizes
        .iter()
        .map(|&s| Vector((0..s).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    let lambda = Vector((0..nc).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let state = CouplingState {
        d,
        v,
        lambda,
        level: TimeLevel::Integer(step_index),
    };

    RandomCase {
        problem,
        state,
        gamma,
        dt,
        method,
        step_index,
    }
}

/// Max absolute difference between a stepper state and an oracle solution.
pub fn state_oracle_gap(state: &CouplingState, oracle: &OracleSolution) -> f64 {
    let mut gap = 0.0_f64;
    for (a, b) in state.d.iter().zip(&oracle.d) {
        for (x, y) in a.iter().zip(b) {
            gap = gap.max((x - y).abs());
        }
    }
    for (a, b) in state.v.iter().zip(&oracle.v) {
        for (x, y) in a.iter().zip(b) {
            gap = gap.max((x - y).abs());
        }
    }
    for (x, y) in state.lambda.iter().zip(&oracle.lambda) {
        gap = gap.max((x - y).abs());
    }
    gap
}
