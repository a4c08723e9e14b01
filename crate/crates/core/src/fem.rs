//! Uniform-mesh finite elements for the transient heat equation: linear
//! elements on an interval, bilinear elements on a rectangle, consistent mass
//! matrices, Dirichlet elimination with load fold-in, and Gauss-quadrature
//! L2 error norms.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{SymmetricMatrix, Vector};

/// Gauss point for 2-point quadrature on [-1, 1] (weights are 1).
const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

// ── Meshes ──────────────────────────────────────────────────────────────────

/// Uniform interval mesh on `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    pub n_elems: usize,
    pub length: f64,
}

impl Mesh1D {
    pub fn new(n_elems: usize, length: f64) -> Self {
        assert!(n_elems > 0, "mesh needs at least one element");
        assert!(length > 0.0, "mesh length must be positive");
        Mesh1D { n_elems, length }
    }

    /// Element size.
    pub fn h(&self) -> f64 {
        self.length / self.n_elems as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elems + 1
    }

    /// Coordinate of node `i`.
    pub fn node_x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }
}

/// Uniform rectangle mesh on `[0, lx] x [0, ly]` with `nx * ny` bilinear
/// elements; node `(i, j)` has id `j * (nx + 1) + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Mesh2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        assert!(nx > 0 && ny > 0, "mesh needs at least one element per direction");
        assert!(lx > 0.0 && ly > 0.0, "mesh extents must be positive");
        Mesh2D { nx, ny, lx, ly }
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Node id of grid position `(i, j)`.
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Grid position of a node id.
    pub fn node_ij(&self, id: usize) -> (usize, usize) {
        (id % (self.nx + 1), id / (self.nx + 1))
    }

    /// Coordinates of a node id.
    pub fn node_xy(&self, id: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(id);
        (i as f64 * self.hx(), j as f64 * self.hy())
    }
}

// ── Material ────────────────────────────────────────────────────────────────

/// Scalar diffusion coefficients: `capacity * du/dt = div(conductivity * grad u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub conductivity: f64,
    pub capacity: f64,
}

impl Material {
    pub const UNIT: Material = Material {
        conductivity: 1.0,
        capacity: 1.0,
    };
}

// ── Forcing ─────────────────────────────────────────────────────────────────

/// Nodal load vector as a function of time. `Zero` is the common case and
/// evaluates without allocating.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Constant(Vector),
    TimeVarying(Arc<dyn Fn(f64) -> Vector + Send + Sync>),
}

impl Forcing {
    /// Load at time `t`; `None` means identically zero.
    pub fn eval(&self, t: f64) -> Option<Vector> {
        match self {
            Forcing::Zero => None,
            Forcing::Constant(v) => Some(v.clone()),
            Forcing::TimeVarying(f) => Some(f(t)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => f.write_str("Forcing::Zero"),
            Forcing::Constant(v) => f.debug_tuple("Forcing::Constant").field(v).finish(),
            Forcing::TimeVarying(_) => f.write_str("Forcing::TimeVarying(..)"),
        }
    }
}

// ── Semi-discrete system ────────────────────────────────────────────────────

/// First-order system `M u' + K u = f(t)` on the active (non-Dirichlet)
/// nodes, with the bookkeeping needed to map back to the full mesh.
#[derive(Debug, Clone)]
pub struct SemiDiscreteSystem {
    /// Mass matrix on active nodes (positive definite).
    pub m: SymmetricMatrix,
    /// Stiffness matrix on active nodes (positive semi-definite).
    pub k: SymmetricMatrix,
    /// Load on active nodes, including Dirichlet fold-in terms.
    pub forcing: Forcing,
    /// Original full-mesh load before reduction; partitioners use this to
    /// tell a real body load apart from pure fold-in terms.
    pub body_load: Forcing,
    /// Initial condition on active nodes.
    pub initial: Vector,
    /// Constrained full-mesh nodes and their fixed values.
    pub dirichlet: Vec<(usize, f64)>,
    /// Active index -> full-mesh node id, ascending.
    pub active_nodes: Vec<usize>,
    /// Node count of the underlying full mesh.
    pub n_full: usize,
}

impl SemiDiscreteSystem {
    /// Reduce a full-mesh system by eliminating Dirichlet rows and columns
    /// and folding `-K[:, c] * value` into the load.
    pub fn from_full(
        m_full: &SymmetricMatrix,
        k_full: &SymmetricMatrix,
        forcing: Forcing,
        initial_full: &[f64],
        dirichlet: Vec<(usize, f64)>,
    ) -> Result<Self> {
        let n_full = m_full.order();
        if k_full.order() != n_full {
            return Err(Error::DimensionMismatch {
                context: "mass and stiffness orders",
                expected: n_full,
                got: k_full.order(),
            });
        }
        if initial_full.len() != n_full {
            return Err(Error::DimensionMismatch {
                context: "initial condition length",
                expected: n_full,
                got: initial_full.len(),
            });
        }
        let mut constrained = vec![false; n_full];
        for &(c, _) in &dirichlet {
            assert!(c < n_full, "Dirichlet node {c} outside mesh of {n_full} nodes");
            assert!(!constrained[c], "Dirichlet node {c} listed twice");
            constrained[c] = true;
        }
        let active_nodes: Vec<usize> = (0..n_full).filter(|&i| !constrained[i]).collect();

        let m = m_full.restrict(&active_nodes);
        let k = k_full.restrict(&active_nodes);
        let initial = Vector((active_nodes.iter().map(|&i| initial_full[i])).collect());

        // Fold-in of the eliminated columns against the fixed values.
        let mut fold = Vector::zeros(active_nodes.len());
        for &(c, value) in &dirichlet {
            if value != 0.0 {
                for (a, &i) in active_nodes.iter().enumerate() {
                    fold[a] -= k_full.get(i, c) * value;
                }
            }
        }
        let has_fold = fold.iter().any(|&x| x != 0.0);

        let body_load = forcing.clone();
        let reduced_forcing = match forcing {
            Forcing::Zero => {
                if has_fold {
                    Forcing::Constant(fold)
                } else {
                    Forcing::Zero
                }
            }
            Forcing::Constant(g) => {
                if g.len() != n_full {
                    return Err(Error::DimensionMismatch {
                        context: "constant load length",
                        expected: n_full,
                        got: g.len(),
                    });
                }
                let mut r = Vector((active_nodes.iter().map(|&i| g[i])).collect());
                for (ri, fi) in r.iter_mut().zip(fold.iter()) {
                    *ri += fi;
                }
                Forcing::Constant(r)
            }
            Forcing::TimeVarying(f) => {
                let active = active_nodes.clone();
                let fold = fold.clone();
                Forcing::TimeVarying(Arc::new(move |t| {
                    let g = f(t);
                    let mut r = Vector((active.iter().map(|&i| g[i])).collect());
                    for (ri, fi) in r.iter_mut().zip(fold.iter()) {
                        *ri += fi;
                    }
                    r
                }))
            }
        };

        Ok(SemiDiscreteSystem {
            m,
            k,
            forcing: reduced_forcing,
            body_load,
            initial,
            dirichlet,
            active_nodes,
            n_full,
        })
    }

    /// Build directly from active-space operators with no constrained nodes.
    pub fn from_reduced(m: SymmetricMatrix, k: SymmetricMatrix, forcing: Forcing, initial: Vector) -> Self {
        let n = m.order();
        SemiDiscreteSystem {
            m,
            k,
            body_load: forcing.clone(),
            forcing,
            initial,
            dirichlet: Vec::new(),
            active_nodes: (0..n).collect(),
            n_full: n,
        }
    }

    /// Number of active unknowns.
    pub fn n_active(&self) -> usize {
        self.active_nodes.len()
    }

    /// Scatter an active-space vector to the full mesh, filling constrained
    /// nodes with their fixed values.
    pub fn expand(&self, reduced: &[f64]) -> Vector {
        assert_eq!(reduced.len(), self.n_active(), "active vector length");
        let mut full = Vector::zeros(self.n_full);
        for (a, &i) in self.active_nodes.iter().enumerate() {
            full[i] = reduced[a];
        }
        for &(c, value) in &self.dirichlet {
            full[c] = value;
        }
        full
    }

    /// Check definiteness: `M` positive definite, `K` positive semi-definite
    /// (tested through a jittered factorization). Intended for setup-time
    /// validation, not per-step use.
    pub fn validate(&self) -> Result<()> {
        self.m.cholesky_factor()?;
        let jitter = 1e-12 * self.k.max_abs_diag().max(self.m.max_abs_diag());
        let shifted = SymmetricMatrix::linear_comb(
            1.0,
            &self.k,
            jitter,
            &SymmetricMatrix::scaled_identity(self.k.order(), 1.0),
        )?;
        shifted.cholesky_factor()?;
        if let Forcing::Constant(g) = &self.forcing {
            if g.len() != self.n_active() {
                return Err(Error::DimensionMismatch {
                    context: "reduced load length",
                    expected: self.n_active(),
                    got: g.len(),
                });
            }
        }
        Ok(())
    }
}

// ── Assembly ────────────────────────────────────────────────────────────────

/// Assemble consistent mass and stiffness for linear elements on an interval;
/// returns `(m, k)` over all mesh nodes with no boundary conditions applied.
pub fn assemble_1d(mesh: &Mesh1D, material: &Material) -> (SymmetricMatrix, SymmetricMatrix) {
    let n = mesh.n_nodes();
    let h = mesh.h();
    let ke = material.conductivity / h;
    let me = material.capacity * h / 6.0;
    let mut m = SymmetricMatrix::zeros(n);
    let mut k = SymmetricMatrix::zeros(n);
    for e in 0..mesh.n_elems {
        let (a, b) = (e, e + 1);
        k.add(a, a, ke);
        k.add(b, b, ke);
        k.add(b, a, -ke);
        m.add(a, a, 2.0 * me);
        m.add(b, b, 2.0 * me);
        m.add(b, a, me);
    }
    (m, k)
}

/// Bilinear shape functions on the reference square, in the element node
/// order `[(i, j), (i+1, j), (i+1, j+1), (i, j+1)]`.
fn shape_2d(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

fn shape_grad_2d(xi: f64, eta: f64) -> [(f64, f64); 4] {
    [
        (-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)),
        (0.25 * (1.0 - eta), -0.25 * (1.0 + xi)),
        (0.25 * (1.0 + eta), 0.25 * (1.0 + xi)),
        (-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)),
    ]
}

/// Element mass and stiffness for one bilinear rectangle, integrated with
/// 2x2 Gauss quadrature (exact for these integrands).
fn element_2d(hx: f64, hy: f64, material: &Material) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let det_j = 0.25 * hx * hy;
    let (sx, sy) = (2.0 / hx, 2.0 / hy);
    let mut me = [[0.0; 4]; 4];
    let mut ke = [[0.0; 4]; 4];
    for &xi in &GAUSS_2 {
        for &eta in &GAUSS_2 {
            let n = shape_2d(xi, eta);
            let g = shape_grad_2d(xi, eta);
            for a in 0..4 {
                let (gax, gay) = (g[a].0 * sx, g[a].1 * sy);
                for b in 0..4 {
                    let (gbx, gby) = (g[b].0 * sx, g[b].1 * sy);
                    me[a][b] += material.capacity * n[a] * n[b] * det_j;
                    ke[a][b] += material.conductivity * (gax * gbx + gay * gby) * det_j;
                }
            }
        }
    }
    (me, ke)
}

/// Assemble consistent mass and stiffness for bilinear elements on a
/// rectangle; returns `(m, k)` over all mesh nodes with no boundary
/// conditions applied.
pub fn assemble_2d(mesh: &Mesh2D, material: &Material) -> (SymmetricMatrix, SymmetricMatrix) {
    let n = mesh.n_nodes();
    let (me, ke) = element_2d(mesh.hx(), mesh.hy(), material);
    let mut m = SymmetricMatrix::zeros(n);
    let mut k = SymmetricMatrix::zeros(n);
    for ej in 0..mesh.ny {
        for ei in 0..mesh.nx {
            let nodes = [
                mesh.node_id(ei, ej),
                mesh.node_id(ei + 1, ej),
                mesh.node_id(ei + 1, ej + 1),
                mesh.node_id(ei, ej + 1),
            ];
            for a in 0..4 {
                for b in 0..=a {
                    m.add(nodes[a], nodes[b], me[a][b]);
                    k.add(nodes[a], nodes[b], ke[a][b]);
                }
            }
        }
    }
    (m, k)
}

// ── L2 error norms ──────────────────────────────────────────────────────────

/// L2 norm of `u_h - exact` over the mesh, with `u_h` the linear interpolant
/// of full-mesh nodal values; 2-point Gauss per element.
pub fn l2_error_1d(mesh: &Mesh1D, full_values: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    assert_eq!(full_values.len(), mesh.n_nodes(), "nodal value count");
    let h = mesh.h();
    let mut acc = 0.0;
    for e in 0..mesh.n_elems {
        let x_left = mesh.node_x(e);
        let (u0, u1) = (full_values[e], full_values[e + 1]);
        for &xi in &GAUSS_2 {
            let n0 = 0.5 * (1.0 - xi);
            let n1 = 0.5 * (1.0 + xi);
            let x = x_left + 0.5 * h * (xi + 1.0);
            let diff = n0 * u0 + n1 * u1 - exact(x);
            acc += 0.5 * h * diff * diff;
        }
    }
    acc.sqrt()
}

/// L2 norm of `u_h - exact` over the mesh, with `u_h` the bilinear
/// interpolant of full-mesh nodal values; 2x2 Gauss per element.
pub fn l2_error_2d(mesh: &Mesh2D, full_values: &[f64], exact: impl Fn(f64, f64) -> f64) -> f64 {
    assert_eq!(full_values.len(), mesh.n_nodes(), "nodal value count");
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let det_j = 0.25 * hx * hy;
    let mut acc = 0.0;
    for ej in 0..mesh.ny {
        for ei in 0..mesh.nx {
            let u = [
                full_values[mesh.node_id(ei, ej)],
                full_values[mesh.node_id(ei + 1, ej)],
                full_values[mesh.node_id(ei + 1, ej + 1)],
                full_values[mesh.node_id(ei, ej + 1)],
            ];
            let (x0, y0) = (ei as f64 * hx, ej as f64 * hy);
            for &xi in &GAUSS_2 {
                for &eta in &GAUSS_2 {
                    let n = shape_2d(xi, eta);
                    let x = x0 + 0.5 * hx * (xi + 1.0);
                    let y = y0 + 0.5 * hy * (eta + 1.0);
                    let uh: f64 = (0..4).map(|a| n[a] * u[a]).sum();
                    let diff = uh - exact(x, y);
                    acc += det_j * diff * diff;
                }
            }
        }
    }
    acc.sqrt()
}

// ── Tests ───────────────────────────────────────────────────────────────────
