//! Non-overlapping domain decomposition with duplicated interface unknowns.
//!
//! A mesh is split into subdomains that each assemble their own mass and
//! stiffness element-wise, so interface nodes exist once per touching
//! subdomain. Signed Boolean constraint matrices tie the copies together:
//! each constraint row picks one copy with `+1` (the lower-indexed
//! subdomain) and one with `-1`, and the interface equation is
//! `sum_i C_i x_i = 0`.

use crate::error::{Error, Result};
use crate::fem::{assemble_1d, assemble_2d, Forcing, Material, Mesh1D, Mesh2D, SemiDiscreteSystem};
use crate::linalg::{SymmetricMatrix, Vector};

// ── Signed Boolean matrices ─────────────────────────────────────────────────

/// Sparse matrix with entries in `{-1, +1}` and at most one nonzero per row,
/// stored as `(row, col, sign)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedBooleanMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SignedBooleanMatrix {
    /// Empty matrix of the given shape.
    pub fn new(rows: usize, cols: usize) -> Self {
        SignedBooleanMatrix {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The stored `(row, col, sign)` triples.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Place `sign` at `(row, col)`. Signs must be exactly +1 or -1 and each
    /// row can hold at most one nonzero.
    pub fn set_entry(&mut self, row: usize, col: usize, sign: f64) {
        assert!(row < self.rows, "row {row} out of {} rows", self.rows);
        assert!(col < self.cols, "col {col} out of {} cols", self.cols);
        assert!(sign == 1.0 || sign == -1.0, "sign must be +1 or -1, got {sign}");
        assert!(
            self.entries.iter().all(|&(r, _, _)| r != row),
            "row {row} already has an entry"
        );
        self.entries.push((row, col, sign));
    }

    /// `y = C x` with `x` over columns.
    pub fn apply(&self, x: &[f64]) -> Vector {
        assert_eq!(x.len(), self.cols, "apply operand length");
        let mut y = Vector::zeros(self.rows);
        for &(r, c, s) in &self.entries {
            y[r] += s * x[c];
        }
        y
    }

    /// `x = C' y` with `y` over rows.
    pub fn apply_transpose(&self, y: &[f64]) -> Vector {
        assert_eq!(y.len(), self.rows, "apply_transpose operand length");
        let mut x = Vector::zeros(self.cols);
        for &(r, c, s) in &self.entries {
            x[c] += s * y[r];
        }
        x
    }

    /// Maximum absolute column sum. Equals 1 when every column holds at most
    /// one entry (interior interface nodes) and grows to the number of
    /// constraint rows sharing a column at cross points.
    pub fn norm_one(&self) -> f64 {
        let mut col_sums = vec![0.0f64; self.cols];
        for &(_, c, s) in &self.entries {
            col_sums[c] += s.abs();
        }
        col_sums.iter().fold(0.0, |m, &v| m.max(v))
    }
}

// ── Subdomains ──────────────────────────────────────────────────────────────

/// One subdomain's operators, its constraint block, and the embedding of its
/// local unknowns into the global active numbering.
#[derive(Debug, Clone)]
pub struct Subdomain {
    /// Local mass matrix (positive definite).
    pub m: SymmetricMatrix,
    /// Local stiffness matrix (positive semi-definite).
    pub k: SymmetricMatrix,
    /// Local load, including this subdomain's share of Dirichlet fold-ins.
    pub forcing: Forcing,
    /// Local active index -> global active index.
    pub local_to_global: Vec<usize>,
    /// Constraint block `C_i`; rows span all interface constraints.
    pub c: SignedBooleanMatrix,
}

impl Subdomain {
    /// Number of local unknowns.
    pub fn n_local(&self) -> usize {
        self.m.order()
    }
}

/// A decomposed problem: the subdomains, the number of interface constraints
/// tying them together, and the undecomposed system for reference solves.
#[derive(Debug, Clone)]
pub struct DecomposedProblem {
    pub subdomains: Vec<Subdomain>,
    pub n_constraints: usize,
    /// The equivalent single-domain system.
    pub global: SemiDiscreteSystem,
}

impl DecomposedProblem {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    /// Total unknowns across subdomains (interface copies counted once per
    /// subdomain).
    pub fn total_dofs(&self) -> usize {
        self.subdomains.iter().map(|s| s.n_local()).sum()
    }

    /// Per-subdomain initial condition, restricted from the global one.
    pub fn initial_d(&self) -> Vec<Vector> {
        self.subdomains
            .iter()
            .map(|s| {
                Vector(
                    s.local_to_global
                        .iter()
                        .map(|&g| self.global.initial[g])
                        .collect(),
                )
            })
            .collect()
    }

    /// Interface residual `sum_i C_i x_i`.
    pub fn constraint_residual(&self, xs: &[Vector]) -> Vector {
        assert_eq!(xs.len(), self.n_subdomains(), "one vector per subdomain");
        let mut r = Vector::zeros(self.n_constraints);
        for (sub, x) in self.subdomains.iter().zip(xs) {
            let y = sub.c.apply(x);
            r.axpy(1.0, &y);
        }
        r
    }

    /// Collapse per-subdomain vectors to the global active numbering,
    /// averaging the duplicated interface copies.
    pub fn gather_mean(&self, xs: &[Vector]) -> Vector {
        assert_eq!(xs.len(), self.n_subdomains(), "one vector per subdomain");
        let n = self.global.n_active();
        let mut acc = Vector::zeros(n);
        let mut count = vec![0usize; n];
        for (sub, x) in self.subdomains.iter().zip(xs) {
            for (l, &g) in sub.local_to_global.iter().enumerate() {
                acc[g] += x[l];
                count[g] += 1;
            }
        }
        for (a, &c) in acc.iter_mut().zip(&count) {
            debug_assert!(c > 0, "global unknown not covered by any subdomain");
            *a /= c as f64;
        }
        acc
    }
}

// ── Partitioners ────────────────────────────────────────────────────────────

/// A constraint chain: the copies of one shared node, each as
/// `(subdomain, local active index)`, ordered by subdomain index. A chain of
/// `L` copies yields `L - 1` constraint rows linking consecutive copies.
type Chain = Vec<(usize, usize)>;

fn build_problem(
    locals: Vec<SemiDiscreteSystem>,
    local_full_to_global_full: Vec<Vec<usize>>,
    chains: Vec<Chain>,
    system: &SemiDiscreteSystem,
) -> DecomposedProblem {
    let mut global_active_index = vec![usize::MAX; system.n_full];
    for (a, &f) in system.active_nodes.iter().enumerate() {
        global_active_index[f] = a;
    }

    let n_constraints: usize = chains.iter().map(|ch| ch.len() - 1).sum();
    let mut cs: Vec<SignedBooleanMatrix> = locals
        .iter()
        .map(|s| SignedBooleanMatrix::new(n_constraints, s.n_active()))
        .collect();
    let mut row = 0;
    for chain in &chains {
        for pair in chain.windows(2) {
            let (p_lo, idx_lo) = pair[0];
            let (p_hi, idx_hi) = pair[1];
            cs[p_lo].set_entry(row, idx_lo, 1.0);
            cs[p_hi].set_entry(row, idx_hi, -1.0);
            row += 1;
        }
    }

    let subdomains = locals
        .into_iter()
        .zip(local_full_to_global_full)
        .zip(cs)
        .map(|((sys, full_map), c)| {
            let local_to_global = sys
                .active_nodes
                .iter()
                .map(|&l| global_active_index[full_map[l]])
                .collect();
            Subdomain {
                m: sys.m,
                k: sys.k,
                forcing: sys.forcing,
                local_to_global,
                c,
            }
        })
        .collect();

    DecomposedProblem {
        subdomains,
        n_constraints,
        global: system.clone(),
    }
}

/// Split a 1D system into `n_subdomains` equal element runs. Interface nodes
/// are duplicated between neighbours, one constraint row per interface, with
/// `+1` on the lower-indexed subdomain's copy.
pub fn partition_1d(
    mesh: &Mesh1D,
    material: &Material,
    system: &SemiDiscreteSystem,
    n_subdomains: usize,
) -> Result<DecomposedProblem> {
    assert!(n_subdomains > 0, "need at least one subdomain");
    assert_eq!(system.n_full, mesh.n_nodes(), "system does not match mesh");
    if !system.body_load.is_zero() {
        return Err(Error::UnsupportedForcing);
    }
    if mesh.n_elems % n_subdomains != 0 {
        return Err(Error::IndivisiblePartition {
            elements: mesh.n_elems,
            parts: n_subdomains,
        });
    }
    let e_per = mesh.n_elems / n_subdomains;
    let full_initial = system.expand(&system.initial);

    let mut locals = Vec::with_capacity(n_subdomains);
    let mut full_maps = Vec::with_capacity(n_subdomains);
    for q in 0..n_subdomains {
        let first = q * e_per;
        let local_mesh = Mesh1D::new(e_per, e_per as f64 * mesh.h());
        let (m_loc, k_loc) = assemble_1d(&local_mesh, material);
        let full_map: Vec<usize> = (0..=e_per).map(|l| first + l).collect();
        let loc_dirichlet: Vec<(usize, f64)> = system
            .dirichlet
            .iter()
            .filter(|&&(c, _)| c >= first && c <= first + e_per)
            .map(|&(c, v)| (c - first, v))
            .collect();
        let loc_initial: Vec<f64> = full_map.iter().map(|&f| full_initial[f]).collect();
        let sys_loc =
            SemiDiscreteSystem::from_full(&m_loc, &k_loc, Forcing::Zero, &loc_initial, loc_dirichlet)?;
        locals.push(sys_loc);
        full_maps.push(full_map);
    }

    let constrained: Vec<bool> = {
        let mut v = vec![false; system.n_full];
        for &(c, _) in &system.dirichlet {
            v[c] = true;
        }
        v
    };
    let mut chains: Vec<Chain> = Vec::new();
    for q in 0..n_subdomains - 1 {
        let shared_full = (q + 1) * e_per;
        if constrained[shared_full] {
            continue;
        }
        let idx_left = locals[q]
            .active_nodes
            .binary_search(&e_per)
            .expect("shared node active on the left");
        let idx_right = locals[q + 1]
            .active_nodes
            .binary_search(&0)
            .expect("shared node active on the right");
        chains.push(vec![(q, idx_left), (q + 1, idx_right)]);
    }

    Ok(build_problem(locals, full_maps, chains, system))
}

/// Split a 2D system into a 2x2 grid of subdomains (element counts must be
/// even in both directions). Nodes on the two interface lines are duplicated
/// in every touching subdomain; each shared node contributes a chain of
/// constraint rows linking its copies in subdomain order, so the centre
/// cross point (four copies) contributes three rows.
pub fn partition_2d(
    mesh: &Mesh2D,
    material: &Material,
    system: &SemiDiscreteSystem,
) -> Result<DecomposedProblem> {
    assert_eq!(system.n_full, mesh.n_nodes(), "system does not match mesh");
    if !system.body_load.is_zero() {
        return Err(Error::UnsupportedForcing);
    }
    if mesh.nx % 2 != 0 {
        return Err(Error::IndivisiblePartition {
            elements: mesh.nx,
            parts: 2,
        });
    }
    if mesh.ny % 2 != 0 {
        return Err(Error::IndivisiblePartition {
            elements: mesh.ny,
            parts: 2,
        });
    }
    let (nxh, nyh) = (mesh.nx / 2, mesh.ny / 2);
    let full_initial = system.expand(&system.initial);

    // Subdomain p = b * 2 + a covers the x-half a and y-half b.
    let origin = |p: usize| -> (usize, usize) { ((p % 2) * nxh, (p / 2) * nyh) };
    let local_id = |p: usize, i: usize, j: usize| -> usize {
        let (i0, j0) = origin(p);
        (j - j0) * (nxh + 1) + (i - i0)
    };

    let mut locals = Vec::with_capacity(4);
    let mut full_maps = Vec::with_capacity(4);
    for p in 0..4 {
        let (i0, j0) = origin(p);
        let local_mesh = Mesh2D::new(nxh, nyh, nxh as f64 * mesh.hx(), nyh as f64 * mesh.hy());
        let (m_loc, k_loc) = assemble_2d(&local_mesh, material);
        let mut full_map = vec![0usize; local_mesh.n_nodes()];
        for j in j0..=j0 + nyh {
            for i in i0..=i0 + nxh {
                full_map[local_id(p, i, j)] = mesh.node_id(i, j);
            }
        }
        let loc_dirichlet: Vec<(usize, f64)> = system
            .dirichlet
            .iter()
            .filter_map(|&(c, v)| {
                let (i, j) = mesh.node_ij(c);
                let inside = i >= i0 && i <= i0 + nxh && j >= j0 && j <= j0 + nyh;
                inside.then(|| (local_id(p, i, j), v))
            })
            .collect();
        let loc_initial: Vec<f64> = full_map.iter().map(|&f| full_initial[f]).collect();
        let sys_loc =
            SemiDiscreteSystem::from_full(&m_loc, &k_loc, Forcing::Zero, &loc_initial, loc_dirichlet)?;
        locals.push(sys_loc);
        full_maps.push(full_map);
    }

    let constrained: Vec<bool> = {
        let mut v = vec![false; system.n_full];
        for &(c, _) in &system.dirichlet {
            v[c] = true;
        }
        v
    };

    // Shared nodes: the vertical line i = nxh and the horizontal line
    // j = nyh, enumerated in global node order.
    let mut shared: Vec<usize> = (0..=mesh.ny)
        .map(|j| mesh.node_id(nxh, j))
        .chain((0..=mesh.nx).map(|i| mesh.node_id(i, nyh)))
        .collect();
    shared.sort_unstable();
    shared.dedup();

    let mut chains: Vec<Chain> = Vec::new();
    for &node in &shared {
        if constrained[node] {
            continue;
        }
        let (i, j) = mesh.node_ij(node);
        let a_halves: &[usize] = if i < nxh {
            &[0]
        } else if i > nxh {
            &[1]
        } else {
            &[0, 1]
        };
        let b_halves: &[usize] = if j < nyh {
            &[0]
        } else if j > nyh {
            &[1]
        } else {
            &[0, 1]
        };
        let mut chain: Chain = Vec::new();
        for &b in b_halves {
            for &a in a_halves {
                let p = b * 2 + a;
                let idx = locals[p]
                    .active_nodes
                    .binary_search(&local_id(p, i, j))
                    .expect("shared node active in touching subdomain");
                chain.push((p, idx));
            }
        }
        debug_assert!(chain.len() >= 2);
        chains.push(chain);
    }

    Ok(build_problem(locals, full_maps, chains, system))
}

// ── Interface operator ──────────────────────────────────────────────────────

/// Dense dual interface operator
/// `G = sum_i C_i (M_i + gamma dt K_i)^-1 C_i'`.
pub fn interface_operator(
    problem: &DecomposedProblem,
    gamma: f64,
    dt: f64,
) -> Result<SymmetricMatrix> {
    let nc = problem.n_constraints;
    let mut g_full = vec![vec![0.0; nc]; nc];
    for sub in &problem.subdomains {
        let mt = SymmetricMatrix::linear_comb(1.0, &sub.m, gamma * dt, &sub.k)?;
        let factor = mt.cholesky_factor()?;
        let entries = sub.c.entries();
        let mut cols: Vec<usize> = entries.iter().map(|&(_, c, _)| c).collect();
        cols.sort_unstable();
        cols.dedup();
        let solves: Vec<(usize, Vector)> = cols
            .iter()
            .map(|&c| {
                let mut e = Vector::zeros(sub.n_local());
                e[c] = 1.0;
                factor.solve_in_place(&mut e);
                (c, e)
            })
            .collect();
        let col_solution = |c: usize| -> &Vector {
            let at = solves.binary_search_by_key(&c, |&(cc, _)| cc).unwrap();
            &solves[at].1
        };
        for &(r1, c1, s1) in entries {
            for &(r2, c2, s2) in entries {
                g_full[r1][r2] += s1 * s2 * col_solution(c2)[c1];
            }
        }
    }
    SymmetricMatrix::from_rows(&g_full)
}

/// True when the interface constraints are independent for this time-step
/// family member, i.e. the dual operator admits a Cholesky factorization.
pub fn verify_independence(problem: &DecomposedProblem, gamma: f64, dt: f64) -> bool {
    match interface_operator(problem, gamma, dt) {
        Ok(g) => g.cholesky_factor().is_ok(),
        Err(_) => false,
    }
}

// ── Tests ───────────────────────────────────────────────────────────────────
