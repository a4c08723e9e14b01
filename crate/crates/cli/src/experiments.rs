//! Experiment drivers: each one builds a decomposed problem, runs a coupled
//! time loop, and emits typed step records plus CSV tables and a one-line
//! machine-readable summary.

use anyhow::Context;
use ddsolve_core::analytic::AnalyticSolution;
use ddsolve_core::decomp::{partition_1d, partition_2d, DecomposedProblem, SignedBooleanMatrix, Subdomain};
use ddsolve_core::error::Error;
use ddsolve_core::fem::{assemble_1d, assemble_2d, Forcing, Material, Mesh1D, Mesh2D, SemiDiscreteSystem};
use ddsolve_core::linalg::{max_generalized_eigenvalue_seeded, SymmetricMatrix, Vector};
use ddsolve_core::stability::{
    baumgarte_alpha_max, baumgarte_critical_dt, counterexample_sequence, energy_step,
    EnergyMonitor, NormTriple, StepRecord,
};
use ddsolve_core::steppers::{
    build_schur, initial_state, interpolate_integer_levels, interpolate_weighted_level,
    step_coupling, CouplingMethod, CouplingState, TrapezoidalConfig,
};

use crate::config::{Experiment, ExperimentConfig, MethodKind};
use crate::csv::{CsvTable, CsvValue};

/// Bounded-run threshold: max state within this factor of the initial scale.
pub const BOUNDED_RATIO: f64 = 1e3;
/// Unbounded-run threshold: max state beyond this factor with a growing
/// envelope.
pub const UNBOUNDED_RATIO: f64 = 1e6;

/// Stability verdict for a completed (or truncated) run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Unbounded,
    Indeterminate,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::Unbounded => "unbounded",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

/// Classify a run from its per-step max-state history. A hard guard trip is
/// always unbounded; otherwise the run is bounded when it never leaves
/// [`BOUNDED_RATIO`] times the initial scale, and unbounded when it exceeds
/// [`UNBOUNDED_RATIO`] times the initial scale with a growing envelope.
pub fn classify_boundedness(maxima: &[f64], guard_tripped: bool) -> Verdict {
    if guard_tripped {
        return Verdict::Unbounded;
    }
    let scale0 = maxima.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let peak = maxima.iter().cloned().fold(0.0_f64, f64::max);
    if peak <= BOUNDED_RATIO * scale0 {
        return Verdict::Bounded;
    }
    let half = maxima.len() / 2;
    let first_half = maxima[..half.max(1)].iter().cloned().fold(0.0_f64, f64::max);
    let second_half = maxima[half..].iter().cloned().fold(0.0_f64, f64::max);
    if peak > UNBOUNDED_RATIO * scale0 && second_half > first_half {
        Verdict::Unbounded
    } else {
        Verdict::Indeterminate
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| format!("{x:.6e}"))
}

// ── Problem builders ────────────────────────────────────────────────────────

/// Two scalar subdomains sharing a single constrained unknown:
/// `m_a u' = -k_a u + lambda`, `m_b u' = -k_b u - lambda`, `u_a = u_b`.
pub fn split_dof_problem(m_a: f64, m_b: f64, k_a: f64, k_b: f64, u0: f64) -> DecomposedProblem {
    let mut c_a = SignedBooleanMatrix::new(1, 1);
    c_a.set_entry(0, 0, 1.0);
    let mut c_b = SignedBooleanMatrix::new(1, 1);
    c_b.set_entry(0, 0, -1.0);
    let global = SemiDiscreteSystem::from_reduced(
        SymmetricMatrix::scaled_identity(1, m_a + m_b),
        SymmetricMatrix::scaled_identity(1, k_a + k_b),
        Forcing::Zero,
        Vector::from(vec![u0]),
    );
    DecomposedProblem {
        subdomains: vec![
            Subdomain {
                m: SymmetricMatrix::scaled_identity(1, m_a),
                k: SymmetricMatrix::scaled_identity(1, k_a),
                forcing: Forcing::Zero,
                local_to_global: vec![0],
                c: c_a,
            },
            Subdomain {
                m: SymmetricMatrix::scaled_identity(1, m_b),
                k: SymmetricMatrix::scaled_identity(1, k_b),
                forcing: Forcing::Zero,
                local_to_global: vec![0],
                c: c_b,
            },
        ],
        n_constraints: 1,
        global,
    }
}

/// Insulated bar on `[0, 2]` split into two equal subdomains, starting from
/// the cosine mode.
pub fn heat1d_problem(
    elems_per_sub: usize,
    material: &Material,
) -> anyhow::Result<(Mesh1D, SemiDiscreteSystem, DecomposedProblem)> {
    let mesh = Mesh1D::new(2 * elems_per_sub, 2.0);
    let initial: Vec<f64> = (0..mesh.n_nodes())
        .map(|i| (std::f64::consts::PI * mesh.node_x(i) / 2.0).cos())
        .collect();
    let (m, k) = assemble_1d(&mesh, material);
    let system = SemiDiscreteSystem::from_full(&m, &k, Forcing::Zero, &initial, vec![])?;
    let problem = partition_1d(&mesh, material, &system, 2)?;
    Ok((mesh, system, problem))
}

/// Insulated square on `[0, 2]^2` split into four equal subdomains, starting
/// from the product cosine mode.
pub fn heat2d_problem(
    elems_per_sub: usize,
    material: &Material,
) -> anyhow::Result<(Mesh2D, SemiDiscreteSystem, DecomposedProblem)> {
    let mesh = Mesh2D::new(2 * elems_per_sub, 2 * elems_per_sub, 2.0, 2.0);
    let initial: Vec<f64> = (0..mesh.n_nodes())
        .map(|id| {
            let (x, y) = mesh.node_xy(id);
            (std::f64::consts::PI * x / 2.0).cos() * (std::f64::consts::PI * y / 2.0).cos()
        })
        .collect();
    let (m, k) = assemble_2d(&mesh, material);
    let system = SemiDiscreteSystem::from_full(&m, &k, Forcing::Zero, &initial, vec![])?;
    let problem = partition_2d(&mesh, material, &system)?;
    Ok((mesh, system, problem))
}

/// Bar on `[0, 2]` insulated at the left end and held at zero at the right,
/// starting from unit temperature, split into two equal subdomains.
pub fn mixed_bar_problem(
    elems_per_sub: usize,
    material: &Material,
) -> anyhow::Result<(Mesh1D, SemiDiscreteSystem, DecomposedProblem)> {
    let mesh = Mesh1D::new(2 * elems_per_sub, 2.0);
    let initial = vec![1.0; mesh.n_nodes()];
    let (m, k) = assemble_1d(&mesh, material);
    let held = mesh.n_nodes() - 1;
    let system = SemiDiscreteSystem::from_full(&m, &k, Forcing::Zero, &initial, vec![(held, 0.0)])?;
    let problem = partition_1d(&mesh, material, &system, 2)?;
    Ok((mesh, system, problem))
}

// ── Split-DOF experiment ────────────────────────────────────────────────────

/// One output row of the two-mass run. Integer-level rates and multipliers
/// for the modified method are produced lazily and therefore lag one step:
/// row `n` carries the level `n - 1` values (absent on early rows).
#[derive(Debug, Clone)]
pub struct SplitStepRow {
    pub step: usize,
    pub time: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub v_a: Option<f64>,
    pub v_b: Option<f64>,
    pub lambda_int: Option<f64>,
    pub v_w_a: Option<f64>,
    pub v_w_b: Option<f64>,
    pub lambda_weighted: Option<f64>,
    pub energy_d: f64,
    pub energy_v: f64,
    pub drift_d_inf: f64,
    pub drift_v_inf: f64,
}

#[derive(Debug)]
pub struct SplitDofOutput {
    pub rows: Vec<SplitStepRow>,
    /// `(step, time)` where the hard divergence guard tripped, if it did.
    pub diverged_at: Option<(usize, f64)>,
    pub verdict: Verdict,
    pub max_state: f64,
    pub max_lambda_int: f64,
    pub max_lambda_weighted: f64,
    pub table: CsvTable,
    pub summary: String,
}

const SPLIT_HEADER: [&str; 15] = [
    "step",
    "time",
    "d_a",
    "d_b",
    "v_a",
    "v_b",
    "lambda_int",
    "v_w_a",
    "v_w_b",
    "lambda_weighted",
    "energy_d",
    "energy_v",
    "drift_d_inf",
    "drift_v_inf",
    "diverged",
];

pub fn run_split_dof(cfg: &ExperimentConfig) -> anyhow::Result<SplitDofOutput> {
    let problem = split_dof_problem(cfg.m_a, cfg.m_b, cfg.k_a, cfg.k_b, cfg.u0);
    let tcfg = TrapezoidalConfig::new(cfg.gamma, cfg.dt)?;
    let method = cfg.coupling_method();
    let op = build_schur(&problem, tcfg, method)?;
    let mut monitor = EnergyMonitor::new(&problem, &tcfg, &method)?;
    let modified = cfg.method == MethodKind::ModifiedDContinuity;

    let mut state = initial_state(&problem)?;
    let mut rec = energy_step(&problem, &state, &mut monitor);
    let mut rows = Vec::with_capacity(cfg.n_steps() + 1);
    rows.push(SplitStepRow {
        step: 0,
        time: 0.0,
        d_a: state.d[0][0],
        d_b: state.d[1][0],
        v_a: Some(state.v[0][0]),
        v_b: Some(state.v[1][0]),
        lambda_int: Some(state.lambda[0]),
        v_w_a: None,
        v_w_b: None,
        lambda_weighted: None,
        energy_d: rec.energy_d,
        energy_v: rec.energy_v,
        drift_d_inf: rec.drift_d.inf,
        drift_v_inf: rec.drift_v.inf,
    });

    let mut maxima = vec![state.state_max()];
    let mut diverged_at = None;
    for n in 1..=cfg.n_steps() {
        match step_coupling(&state, &problem, &op) {
            Ok(next) => {
                rec = energy_step(&problem, &next, &mut monitor);
                maxima.push(next.state_max());
                let (v_a, v_b, lambda_int, v_w_a, v_w_b, lambda_weighted);
                if modified {
                    // Weighted values are the state itself; integer values
                    // become available one step behind.
                    v_w_a = Some(next.v[0][0]);
                    v_w_b = Some(next.v[1][0]);
                    lambda_weighted = Some(next.lambda[0]);
                    if n >= 2 {
                        let (vi, li) = interpolate_integer_levels(&state, &next, cfg.gamma)?;
                        v_a = Some(vi[0][0]);
                        v_b = Some(vi[1][0]);
                        lambda_int = Some(li[0]);
                    } else {
                        v_a = None;
                        v_b = None;
                        lambda_int = None;
                    }
                } else {
                    // Integer values are the state; weighted diagnostics
                    // combine the previous and current records.
                    v_a = Some(next.v[0][0]);
                    v_b = Some(next.v[1][0]);
                    lambda_int = Some(next.lambda[0]);
                    v_w_a = Some(interpolate_weighted_level(&state.v[0], &next.v[0], cfg.gamma)[0]);
                    v_w_b = Some(interpolate_weighted_level(&state.v[1], &next.v[1], cfg.gamma)[0]);
                    lambda_weighted =
                        Some(interpolate_weighted_level(&state.lambda, &next.lambda, cfg.gamma)[0]);
                }
                rows.push(SplitStepRow {
                    step: n,
                    time: n as f64 * cfg.dt,
                    d_a: next.d[0][0],
                    d_b: next.d[1][0],
                    v_a,
                    v_b,
                    lambda_int,
                    v_w_a,
                    v_w_b,
                    lambda_weighted,
                    energy_d: rec.energy_d,
                    energy_v: rec.energy_v,
                    drift_d_inf: rec.drift_d.inf,
                    drift_v_inf: rec.drift_v.inf,
                });
                state = next;
            }
            Err(Error::Diverged { time, .. }) => {
                diverged_at = Some((n, time));
                break;
            }
            Err(other) => return Err(other.into()),
        }
    }

    let verdict = classify_boundedness(&maxima, diverged_at.is_some());
    let max_state = maxima.iter().cloned().fold(0.0_f64, f64::max);
    let max_lambda_int = rows
        .iter()
        .filter_map(|r| r.lambda_int)
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let max_lambda_weighted = rows
        .iter()
        .filter_map(|r| r.lambda_weighted)
        .fold(0.0_f64, |m, x| m.max(x.abs()));

    let mut table = CsvTable::new(&SPLIT_HEADER);
    for r in &rows {
        table.push_row(vec![
            r.step.into(),
            r.time.into(),
            r.d_a.into(),
            r.d_b.into(),
            r.v_a.into(),
            r.v_b.into(),
            r.lambda_int.into(),
            r.v_w_a.into(),
            r.v_w_b.into(),
            r.lambda_weighted.into(),
            r.energy_d.into(),
            r.energy_v.into(),
            r.drift_d_inf.into(),
            r.drift_v_inf.into(),
            false.into(),
        ]);
    }
    if let Some((step, time)) = diverged_at {
        let mut row: Vec<CsvValue> = vec![step.into(), time.into()];
        row.extend(std::iter::repeat_with(|| CsvValue::Empty).take(12));
        row.push(true.into());
        table.push_row(row);
    }

    let summary = format!(
        "experiment=split-dof method={} gamma={:.6e} dt={:.6e} steps={} verdict={} \
         max_state={:.6e} max_lambda_int={:.6e} max_lambda_weighted={:.6e} diverged_at={}",
        cfg.method.name(),
        cfg.gamma,
        cfg.dt,
        rows.len() - 1,
        verdict.name(),
        max_state,
        max_lambda_int,
        max_lambda_weighted,
        diverged_at.map_or_else(|| "none".into(), |(s, _)| s.to_string()),
    );

    Ok(SplitDofOutput {
        rows,
        diverged_at,
        verdict,
        max_state,
        max_lambda_int,
        max_lambda_weighted,
        table,
        summary,
    })
}

// ── Heat experiments ────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct SnapshotRow {
    pub time: f64,
    pub node: usize,
    pub x: f64,
    pub y: Option<f64>,
    pub u_num: f64,
    pub u_exact: f64,
}

#[derive(Debug)]
pub struct HeatOutput {
    pub diag_rows: Vec<StepRecord>,
    pub snapshot_rows: Vec<SnapshotRow>,
    /// `(time, L2 temperature error)` per recorded snapshot.
    pub l2_errors: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub diverged_at: Option<(usize, f64)>,
    /// Nodal snapshot table.
    pub table: CsvTable,
    /// Per-step diagnostic table.
    pub steps_table: CsvTable,
    pub summary: String,
}

const HEAT_SNAPSHOT_HEADER: [&str; 7] = ["time", "node", "x", "y", "u_num", "u_exact", "abs_err"];
const HEAT_STEPS_HEADER: [&str; 13] = [
    "step",
    "time",
    "energy_d",
    "energy_v",
    "drift_d_one",
    "drift_d_two",
    "drift_d_inf",
    "drift_v_one",
    "drift_v_two",
    "drift_v_inf",
    "lambda_inf",
    "state_max",
    "diverged",
];

enum HeatGeometry {
    One(Mesh1D),
    Two(Mesh2D),
}

pub fn run_heat(cfg: &ExperimentConfig) -> anyhow::Result<HeatOutput> {
    let material = Material {
        conductivity: cfg.conductivity,
        capacity: cfg.capacity,
    };
    let (geometry, system, problem, analytic) = match cfg.experiment {
        Experiment::Heat1d => {
            let (mesh, system, problem) = heat1d_problem(cfg.mesh, &material)?;
            let analytic = AnalyticSolution::heat1d_neumann(cfg.conductivity, cfg.capacity);
            (HeatGeometry::One(mesh), system, problem, analytic)
        }
        Experiment::Heat2d => {
            let (mesh, system, problem) = heat2d_problem(cfg.mesh, &material)?;
            let analytic = AnalyticSolution::heat2d_neumann(cfg.conductivity, cfg.capacity);
            (HeatGeometry::Two(mesh), system, problem, analytic)
        }
        other => anyhow::bail!("run_heat cannot drive the {} experiment", other.name()),
    };

    let tcfg = TrapezoidalConfig::new(cfg.gamma, cfg.dt)?;
    let method = cfg.coupling_method();
    let op = build_schur(&problem, tcfg, method)?;
    let mut monitor = EnergyMonitor::new(&problem, &tcfg, &method)?;

    // Map requested snapshot times to step indices (default: final time).
    let mut snap_steps: Vec<usize> = if cfg.snapshots.is_empty() {
        vec![cfg.n_steps()]
    } else {
        cfg.snapshots
            .iter()
            .map(|t| (t / cfg.dt).round() as usize)
            .collect()
    };
    snap_steps.sort_unstable();
    snap_steps.dedup();

    let mut state = initial_state(&problem)?;
    let mut diag_rows = vec![energy_step(&problem, &state, &mut monitor)];
    let mut snapshot_rows = Vec::new();
    let mut l2_errors = Vec::new();
    let mut maxima = vec![state.state_max()];
    let mut diverged_at = None;

    let record_snapshot = |state: &CouplingState,
                               step: usize,
                               snapshot_rows: &mut Vec<SnapshotRow>,
                               l2_errors: &mut Vec<(f64, f64)>| {
        let t = step as f64 * cfg.dt;
        let full = system.expand(problem.gather_mean(&state.d).as_slice());
        match &geometry {
            HeatGeometry::One(mesh) => {
                for node in 0..mesh.n_nodes() {
                    let x = mesh.node_x(node);
                    snapshot_rows.push(SnapshotRow {
                        time: t,
                        node,
                        x,
                        y: None,
                        u_num: full[node],
                        u_exact: analytic.evaluate(&[x], t),
                    });
                }
                l2_errors.push((
                    t,
                    ddsolve_core::fem::l2_error_1d(mesh, full.as_slice(), |x| {
                        analytic.evaluate(&[x], t)
                    }),
                ));
            }
            HeatGeometry::Two(mesh) => {
                for node in 0..mesh.n_nodes() {
                    let (x, y) = mesh.node_xy(node);
                    snapshot_rows.push(SnapshotRow {
                        time: t,
                        node,
                        x,
                        y: Some(y),
                        u_num: full[node],
                        u_exact: analytic.evaluate(&[x, y], t),
                    });
                }
                l2_errors.push((
                    t,
                    ddsolve_core::fem::l2_error_2d(mesh, full.as_slice(), |x, y| {
                        analytic.evaluate(&[x, y], t)
                    }),
                ));
            }
        }
    };

    if snap_steps.contains(&0) {
        record_snapshot(&state, 0, &mut snapshot_rows, &mut l2_errors);
    }
    for n in 1..=cfg.n_steps() {
        match step_coupling(&state, &problem, &op) {
            Ok(next) => {
                diag_rows.push(energy_step(&problem, &next, &mut monitor));
                maxima.push(next.state_max());
                if snap_steps.contains(&n) {
                    record_snapshot(&next, n, &mut snapshot_rows, &mut l2_errors);
                }
                state = next;
            }
            Err(Error::Diverged { time, .. }) => {
                diverged_at = Some((n, time));
                break;
            }
            Err(other) => return Err(other.into()),
        }
    }

    let verdict = classify_boundedness(&maxima, diverged_at.is_some());

    let mut table = CsvTable::new(&HEAT_SNAPSHOT_HEADER);
    for r in &snapshot_rows {
        table.push_row(vec![
            r.time.into(),
            r.node.into(),
            r.x.into(),
            r.y.into(),
            r.u_num.into(),
            r.u_exact.into(),
            (r.u_num - r.u_exact).abs().into(),
        ]);
    }
    let mut steps_table = CsvTable::new(&HEAT_STEPS_HEADER);
    for (n, r) in diag_rows.iter().enumerate() {
        steps_table.push_row(vec![
            n.into(),
            r.t.into(),
            r.energy_d.into(),
            r.energy_v.into(),
            r.drift_d.one.into(),
            r.drift_d.two.into(),
            r.drift_d.inf.into(),
            r.drift_v.one.into(),
            r.drift_v.two.into(),
            r.drift_v.inf.into(),
            r.lambda_norm.into(),
            r.state_max.into(),
            false.into(),
        ]);
    }
    if let Some((step, time)) = diverged_at {
        let mut row: Vec<CsvValue> = vec![step.into(), time.into()];
        row.extend(std::iter::repeat_with(|| CsvValue::Empty).take(10));
        row.push(true.into());
        steps_table.push_row(row);
    }

    let last_l2 = l2_errors.last().map(|&(_, e)| e);
    let summary = format!(
        "experiment={} method={} gamma={:.6e} dt={:.6e} mesh={} steps={} verdict={} \
         max_state={:.6e} l2_final={} diverged_at={}",
        cfg.experiment.name(),
        cfg.method.name(),
        cfg.gamma,
        cfg.dt,
        cfg.mesh,
        diag_rows.len() - 1,
        verdict.name(),
        maxima.iter().cloned().fold(0.0_f64, f64::max),
        fmt_opt(last_l2),
        diverged_at.map_or_else(|| "none".into(), |(s, _)| s.to_string()),
    );

    Ok(HeatOutput {
        diag_rows,
        snapshot_rows,
        l2_errors,
        verdict,
        diverged_at,
        table,
        steps_table,
        summary,
    })
}

// ── Convergence study ───────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct LevelRow {
    pub elems_per_sub: usize,
    pub h: f64,
    pub l2_d: f64,
    pub l2_v: f64,
    pub rate_d: Option<f64>,
    pub rate_v: Option<f64>,
}

#[derive(Debug)]
pub struct ConvergenceOutput {
    pub rows: Vec<LevelRow>,
    pub table: CsvTable,
    pub summary: String,
}

const CONVERGE_HEADER: [&str; 6] = ["elems_per_sub", "h", "l2_err_d", "l2_err_v", "rate_d", "rate_v"];

pub fn run_convergence(cfg: &ExperimentConfig) -> anyhow::Result<ConvergenceOutput> {
    let material = Material {
        conductivity: cfg.conductivity,
        capacity: cfg.capacity,
    };
    let t_final = cfg.n_steps() as f64 * cfg.dt;
    // The exact rate field of the separable mode is a multiple of the field.
    let decay = match cfg.dim {
        1 => -(cfg.conductivity / cfg.capacity) * (std::f64::consts::PI.powi(2) / 4.0),
        _ => -(cfg.conductivity / cfg.capacity) * (std::f64::consts::PI.powi(2) / 2.0),
    };

    let mut rows: Vec<LevelRow> = Vec::with_capacity(cfg.levels.len());
    for &level in &cfg.levels {
        let (l2_d, l2_v, h) = converge_level(cfg, level, &material, t_final, decay)
            .with_context(|| format!("convergence level {level}"))?;
        let (rate_d, rate_v) = match rows.last() {
            Some(prevr) => (
                Some((prevr.l2_d / l2_d).log2()),
                Some((prevr.l2_v / l2_v).log2()),
            ),
            None => (None, None),
        };
        rows.push(LevelRow {
            elems_per_sub: level,
            h,
            l2_d,
            l2_v,
            rate_d,
            rate_v,
        });
    }

    let mut table = CsvTable::new(&CONVERGE_HEADER);
    for r in &rows {
        table.push_row(vec![
            r.elems_per_sub.into(),
            r.h.into(),
            r.l2_d.into(),
            r.l2_v.into(),
            r.rate_d.into(),
            r.rate_v.into(),
        ]);
    }
    let finest = rows.last().unwrap();
    let summary = format!(
        "experiment=converge dim={} method={} gamma={:.6e} dt={:.6e} levels={} \
         l2_d_finest={:.6e} rate_d_finest={} rate_v_finest={}",
        cfg.dim,
        cfg.method.name(),
        cfg.gamma,
        cfg.dt,
        rows.len(),
        finest.l2_d,
        fmt_opt(finest.rate_d),
        fmt_opt(finest.rate_v),
    );
    Ok(ConvergenceOutput {
        rows,
        table,
        summary,
    })
}

/// Run one refinement level to `t_final` and return `(l2_d, l2_v, h)`.
fn converge_level(
    cfg: &ExperimentConfig,
    level: usize,
    material: &Material,
    t_final: f64,
    decay: f64,
) -> anyhow::Result<(f64, f64, f64)> {
    let tcfg = TrapezoidalConfig::new(cfg.gamma, cfg.dt)?;
    let method = cfg.coupling_method();
    let modified = cfg.method == MethodKind::ModifiedDContinuity;
    let n_steps = cfg.n_steps();

    enum Geo {
        One(Mesh1D),
        Two(Mesh2D),
    }
    let (geo, system, problem, analytic) = match cfg.dim {
        1 => {
            let (mesh, system, problem) = heat1d_problem(level, material)?;
            let analytic = AnalyticSolution::heat1d_neumann(cfg.conductivity, cfg.capacity);
            (Geo::One(mesh), system, problem, analytic)
        }
        _ => {
            let (mesh, system, problem) = heat2d_problem(level, material)?;
            let analytic = AnalyticSolution::heat2d_neumann(cfg.conductivity, cfg.capacity);
            (Geo::Two(mesh), system, problem, analytic)
        }
    };
    let op = build_schur(&problem, tcfg, method)?;

    let mut state = initial_state(&problem)?;
    for _ in 0..n_steps {
        state = step_coupling(&state, &problem, &op)?;
    }
    let d_full = system.expand(problem.gather_mean(&state.d).as_slice());
    // Integer-level rates: direct for integer-level methods; one further step
    // and a convex combination for the modified method (whose stored rates
    // sit at weighted levels).
    let v_blocks: Vec<Vector> = if modified && n_steps > 0 {
        let next = step_coupling(&state, &problem, &op)?;
        let (vi, _) = interpolate_integer_levels(&state, &next, cfg.gamma)?;
        vi
    } else {
        state.v.clone()
    };
    let v_full = system.expand(problem.gather_mean(&v_blocks).as_slice());

    let (l2_d, l2_v, h) = match &geo {
        Geo::One(mesh) => (
            ddsolve_core::fem::l2_error_1d(mesh, d_full.as_slice(), |x| {
                analytic.evaluate(&[x], t_final)
            }),
            ddsolve_core::fem::l2_error_1d(mesh, v_full.as_slice(), |x| {
                decay * analytic.evaluate(&[x], t_final)
            }),
            mesh.h(),
        ),
        Geo::Two(mesh) => (
            ddsolve_core::fem::l2_error_2d(mesh, d_full.as_slice(), |x, y| {
                analytic.evaluate(&[x, y], t_final)
            }),
            ddsolve_core::fem::l2_error_2d(mesh, v_full.as_slice(), |x, y| {
                decay * analytic.evaluate(&[x, y], t_final)
            }),
            mesh.hx(),
        ),
    };
    Ok((l2_d, l2_v, h))
}

// ── Baumgarte sweep ─────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct BaumgarteStepRow {
    pub step: usize,
    pub time: f64,
    pub lambda_inf: f64,
    pub drift_d: NormTriple,
    pub drift_v: NormTriple,
    /// `| ||sum C d||_2 - (dt/alpha) ||sum C v||_2 |`.
    pub identity_dev: f64,
    pub energy_v: f64,
    pub state_max: f64,
}

#[derive(Debug)]
pub struct BaumgarteOutput {
    pub rows: Vec<BaumgarteStepRow>,
    /// Stiffest generalized frequency per subdomain.
    pub omegas: Vec<f64>,
    pub alpha_max: f64,
    /// `None` when alpha exceeds the admissible bound.
    pub critical_dt: Option<f64>,
    pub verdict: Verdict,
    pub diverged_at: Option<(usize, f64)>,
    pub max_drift_d_inf: f64,
    pub max_identity_dev: f64,
    pub table: CsvTable,
    pub summary: String,
}

const BAUMGARTE_HEADER: [&str; 13] = [
    "step",
    "time",
    "lambda_inf",
    "drift_d_one",
    "drift_d_two",
    "drift_d_inf",
    "drift_v_one",
    "drift_v_two",
    "drift_v_inf",
    "identity_dev",
    "energy_v",
    "state_max",
    "diverged",
];

pub fn run_baumgarte(cfg: &ExperimentConfig) -> anyhow::Result<BaumgarteOutput> {
    let material = Material {
        conductivity: cfg.conductivity,
        capacity: cfg.capacity,
    };
    let (_, _, problem) = mixed_bar_problem(cfg.mesh, &material)?;
    let tcfg = TrapezoidalConfig::new(cfg.gamma, cfg.dt)?;
    let method = CouplingMethod::Baumgarte { alpha: cfg.alpha };
    let op = build_schur(&problem, tcfg, method)?;
    let mut monitor = EnergyMonitor::new(&problem, &tcfg, &method)?;

    let omegas: Vec<f64> = problem
        .subdomains
        .iter()
        .map(|sub| max_generalized_eigenvalue_seeded(&sub.m, &sub.k, cfg.seed))
        .collect::<Result<_, _>>()?;
    let omega_max = omegas.iter().cloned().fold(0.0_f64, f64::max);
    let alpha_max = baumgarte_alpha_max(cfg.gamma)?;
    let critical_dt = match baumgarte_critical_dt(cfg.gamma, cfg.alpha, omega_max) {
        Ok(v) => Some(v),
        Err(Error::AlphaOutOfRange { .. }) => None,
        Err(other) => return Err(other.into()),
    };

    let mut state = initial_state(&problem)?;
    let mut rows = Vec::with_capacity(cfg.n_steps() + 1);
    let mut maxima = Vec::with_capacity(cfg.n_steps() + 1);
    let mut diverged_at = None;
    let push_row = |state: &CouplingState,
                        n: usize,
                        monitor: &mut EnergyMonitor,
                        rows: &mut Vec<BaumgarteStepRow>| {
        let rec = energy_step(&problem, state, monitor);
        rows.push(BaumgarteStepRow {
            step: n,
            time: rec.t,
            lambda_inf: rec.lambda_norm,
            drift_d: rec.drift_d,
            drift_v: rec.drift_v,
            identity_dev: (rec.drift_d.two - (cfg.dt / cfg.alpha) * rec.drift_v.two).abs(),
            energy_v: rec.energy_v,
            state_max: rec.state_max,
        });
    };
    push_row(&state, 0, &mut monitor, &mut rows);
    maxima.push(state.state_max());
    for n in 1..=cfg.n_steps() {
        match step_coupling(&state, &problem, &op) {
            Ok(next) => {
                push_row(&next, n, &mut monitor, &mut rows);
                maxima.push(next.state_max());
                state = next;
            }
            Err(Error::Diverged { time, .. }) => {
                diverged_at = Some((n, time));
                break;
            }
            Err(other) => return Err(other.into()),
        }
    }

    let verdict = classify_boundedness(&maxima, diverged_at.is_some());
    let max_drift_d_inf = rows.iter().fold(0.0_f64, |m, r| m.max(r.drift_d.inf));
    let max_identity_dev = rows.iter().fold(0.0_f64, |m, r| m.max(r.identity_dev));

    let mut table = CsvTable::new(&BAUMGARTE_HEADER);
    for r in &rows {
        table.push_row(vec![
            r.step.into(),
            r.time.into(),
            r.lambda_inf.into(),
            r.drift_d.one.into(),
            r.drift_d.two.into(),
            r.drift_d.inf.into(),
            r.drift_v.one.into(),
            r.drift_v.two.into(),
            r.drift_v.inf.into(),
            r.identity_dev.into(),
            r.energy_v.into(),
            r.state_max.into(),
            false.into(),
        ]);
    }
    if let Some((step, time)) = diverged_at {
        let mut row: Vec<CsvValue> = vec![step.into(), time.into()];
        row.extend(std::iter::repeat_with(|| CsvValue::Empty).take(10));
        row.push(true.into());
        table.push_row(row);
    }

    let summary = format!(
        "experiment=baumgarte gamma={:.6e} alpha={:.6e} dt={:.6e} mesh={} steps={} \
         omega_a={:.6e} omega_b={:.6e} alpha_max={:.6e} critical_dt={} verdict={} \
         max_drift_d_inf={:.6e} max_identity_dev={:.6e} diverged_at={}",
        cfg.gamma,
        cfg.alpha,
        cfg.dt,
        cfg.mesh,
        rows.len() - 1,
        omegas[0],
        omegas[1],
        alpha_max,
        fmt_opt(critical_dt),
        verdict.name(),
        max_drift_d_inf,
        max_identity_dev,
        diverged_at.map_or_else(|| "none".into(), |(s, _)| s.to_string()),
    );

    Ok(BaumgarteOutput {
        rows,
        omegas,
        alpha_max,
        critical_dt,
        verdict,
        diverged_at,
        max_drift_d_inf,
        max_identity_dev,
        table,
        summary,
    })
}

// ── Counterexample sequence ─────────────────────────────────────────────────

#[derive(Debug)]
pub struct CounterexampleOutput {
    pub integer_terms: Vec<f64>,
    pub weighted_terms: Vec<f64>,
    pub table: CsvTable,
    pub summary: String,
}

const COUNTEREXAMPLE_HEADER: [&str; 3] = ["n", "s_int", "s_weighted"];

pub fn run_counterexample(cfg: &ExperimentConfig) -> anyhow::Result<CounterexampleOutput> {
    let (integer_terms, weighted_terms) = counterexample_sequence(cfg.gamma, cfg.n_terms)?;
    let mut table = CsvTable::new(&COUNTEREXAMPLE_HEADER);
    for (n, &s) in integer_terms.iter().enumerate() {
        table.push_row(vec![
            n.into(),
            s.into(),
            weighted_terms.get(n).copied().into(),
        ]);
    }
    let last_ratio = if integer_terms.len() >= 3 {
        let a = integer_terms[integer_terms.len() - 2];
        let b = integer_terms[integer_terms.len() - 1];
        (a != 0.0).then(|| (b / a).abs())
    } else {
        None
    };
    let max_weighted = weighted_terms
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let summary = format!(
        "experiment=counterexample gamma={:.6e} n_terms={} last_ratio={} max_weighted={:.6e}",
        cfg.gamma,
        cfg.n_terms,
        fmt_opt(last_ratio),
        max_weighted,
    );
    Ok(CounterexampleOutput {
        integer_terms,
        weighted_terms,
        table,
        summary,
    })
}

// ── Tests ───────────────────────────────────────────────────────────────────
