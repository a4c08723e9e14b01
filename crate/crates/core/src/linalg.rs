//! Dense symmetric linear algebra: packed symmetric storage, Cholesky
//! factorization, and a seeded power iteration for the largest generalized
//! eigenvalue of `K x = omega M x`.
//!
//! Matrices here are small and dense (desk-scale meshes), so the storage is a
//! packed lower triangle and the factorization is an unblocked Crout sweep
//! with contiguous row dot products.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative pivot tolerance for the Cholesky factorization, applied against
/// the largest diagonal entry of the input.
pub const CHOLESKY_PIVOT_REL_TOL: f64 = 1e-14;

/// Relative symmetry tolerance accepted by [`SymmetricMatrix::from_rows`].
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Hard cap on power-iteration sweeps in [`max_generalized_eigenvalue`].
pub const EIGEN_MAX_ITERATIONS: usize = 50_000;

/// Relative stagnation tolerance on the Rayleigh quotient.
pub const EIGEN_REL_TOL: f64 = 1e-10;

/// Seed used by [`max_generalized_eigenvalue`] when the caller does not
/// provide one; fixed so repeated runs are bit-identical.
pub const EIGEN_DEFAULT_SEED: u64 = 0x0dd5_01ce;

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ── Vector ──────────────────────────────────────────────────────────────────

/// Dense column vector; derefs to a slice so indexing and iteration read like
/// plain `Vec<f64>` code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    /// Zero vector of length `n`.
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    /// View the entries as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Sum of absolute entries.
    pub fn norm_one(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    /// Euclidean norm.
    pub fn norm_two(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    /// Largest absolute entry (0 for the empty vector).
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &[f64]) {
        debug_assert_eq!(self.0.len(), other.len());
        for (y, x) in self.0.iter_mut().zip(other) {
            *y += s * x;
        }
    }

    /// Multiply every entry by `s`.
    pub fn scale(&mut self, s: f64) {
        for y in &mut self.0 {
            *y *= s;
        }
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

// ── SymmetricMatrix ─────────────────────────────────────────────────────────

/// Dense symmetric matrix stored as a packed lower triangle in row-major
/// order: entry `(i, j)` with `i >= j` lives at `i * (i + 1) / 2 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Zero matrix of order `n`.
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Identity scaled by `s`.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut a = Self::zeros(n);
        for i in 0..n {
            a.set(i, i, s);
        }
        a
    }

    /// Build from full square rows, verifying symmetry to a relative
    /// tolerance of [`SYMMETRY_REL_TOL`] against the largest entry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "row length in square matrix",
                    expected: n,
                    got: row.len(),
                });
            }
            let _ = i;
        }
        let scale = rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = SYMMETRY_REL_TOL * scale;
        let mut a = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let dev = (rows[i][j] - rows[j][i]).abs();
                if dev > tol {
                    return Err(Error::NotSymmetric { i, j, deviation: dev });
                }
                a.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(a)
    }

    /// Matrix order.
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(i >= j);
        i * (i + 1) / 2 + j
    }

    /// Entry `(i, j)`; index order is irrelevant by symmetry.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[Self::idx(i, j)]
    }

    /// Overwrite entry `(i, j)` (and its mirror).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[Self::idx(i, j)] = v;
    }

    /// Add `v` to entry `(i, j)` (and its mirror). Assembly loops must visit
    /// each unordered index pair once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[Self::idx(i, j)] += v;
    }

    /// Largest absolute diagonal entry.
    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n).fold(0.0, |m, i| m.max(self.data[Self::idx(i, i)].abs()))
    }

    /// `a * A + b * B`, entry-wise on the packed triangles.
    pub fn linear_comb(a: f64, ma: &SymmetricMatrix, b: f64, mb: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        if ma.n != mb.n {
            return Err(Error::DimensionMismatch {
                context: "linear combination of symmetric matrices",
                expected: ma.n,
                got: mb.n,
            });
        }
        let data = ma
            .data
            .iter()
            .zip(&mb.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(SymmetricMatrix { n: ma.n, data })
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vector {
        assert_eq!(x.len(), self.n, "matvec operand length");
        let mut y = vec![0.0; self.n];
        let mut off = 0;
        for i in 0..self.n {
            let row = &self.data[off..off + i];
            let xi = x[i];
            let mut acc = self.data[off + i] * xi;
            for (j, &aij) in row.iter().enumerate() {
                acc += aij * x[j];
                y[j] += aij * xi;
            }
            y[i] += acc;
            off += i + 1;
        }
        Vector(y)
    }

    /// `x' A x` without forming the intermediate product vector.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "quadratic form operand length");
        let mut diag = 0.0;
        let mut off_diag = 0.0;
        let mut off = 0;
        for i in 0..self.n {
            let xi = x[i];
            for j in 0..i {
                off_diag += self.data[off + j] * xi * x[j];
            }
            diag += self.data[off + i] * xi * xi;
            off += i + 1;
        }
        diag + 2.0 * off_diag
    }

    /// Principal submatrix on the given indices, in their listed order.
    pub fn restrict(&self, indices: &[usize]) -> SymmetricMatrix {
        let mut out = SymmetricMatrix::zeros(indices.len());
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate().take(a + 1) {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    /// Cholesky factorization `A = L L'`; fails with
    /// [`Error::NotPositiveDefinite`] when a pivot drops to
    /// `CHOLESKY_PIVOT_REL_TOL * max(diag)` or below.
    pub fn cholesky_factor(&self) -> Result<CholeskyFactor> {
        let n = self.n;
        let tolerance = CHOLESKY_PIVOT_REL_TOL * self.max_abs_diag();
        let mut l = self.data.clone();
        let mut row_off = vec![0usize; n];
        for i in 1..n {
            row_off[i] = row_off[i - 1] + i;
        }
        for i in 0..n {
            let oi = row_off[i];
            for j in 0..i {
                let oj = row_off[j];
                let (head, tail) = l.split_at_mut(oi);
                let row_j = &head[oj..oj + j];
                let row_i = &tail[..j];
                let s = dot(row_i, row_j);
                tail[j] = (tail[j] - s) / head[oj + j];
            }
            let row_i = &l[oi..oi + i];
            let pivot = l[oi + i] - dot(row_i, row_i);
            if pivot <= tolerance {
                return Err(Error::NotPositiveDefinite {
                    pivot,
                    index: i,
                    tolerance,
                });
            }
            l[oi + i] = pivot.sqrt();
        }
        Ok(CholeskyFactor { n, data: l })
    }
}

// ── CholeskyFactor ──────────────────────────────────────────────────────────

/// Lower-triangular Cholesky factor in the same packed layout as
/// [`SymmetricMatrix`]; reusable for repeated solves.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    /// Factored matrix order.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vector {
        let mut x = Vector(b.to_vec());
        self.solve_in_place(&mut x);
        x
    }

    /// Solve `A x = b` overwriting `b` with `x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "solve operand length");
        // Forward: L y = b, row dot products over the packed rows.
        let mut off = 0;
        for i in 0..self.n {
            let row = &self.data[off..off + i];
            let s = dot(row, &x[..i]);
            x[i] = (x[i] - s) / self.data[off + i];
            off += i + 1;
        }
        // Backward: L' x = y, column updates expressed as contiguous row axpys.
        for j in (0..self.n).rev() {
            off -= j + 1;
            let xj = x[j] / self.data[off + j];
            x[j] = xj;
            let row = &self.data[off..off + j];
            for (i, &lji) in row.iter().enumerate() {
                x[i] -= lji * xj;
            }
        }
    }
}

// ── Generalized eigenvalue iteration ────────────────────────────────────────

/// Largest eigenvalue of `K x = omega M x` using the fixed default seed.
///
/// `M` must be positive definite; `K` is expected symmetric positive
/// semi-definite, and tiny negative Rayleigh values from roundoff are clamped
/// to zero.
pub fn max_generalized_eigenvalue(m: &SymmetricMatrix, k: &SymmetricMatrix) -> Result<f64> {
    max_generalized_eigenvalue_seeded(m, k, EIGEN_DEFAULT_SEED)
}

/// Largest eigenvalue of `K x = omega M x` by power iteration on `M^-1 K`
/// from a seeded random start vector.
///
/// Converges when consecutive Rayleigh quotients agree to [`EIGEN_REL_TOL`]
/// relatively; gives up after [`EIGEN_MAX_ITERATIONS`] sweeps.
pub fn max_generalized_eigenvalue_seeded(
    m: &SymmetricMatrix,
    k: &SymmetricMatrix,
    seed: u64,
) -> Result<f64> {
    let n = m.order();
    if k.order() != n {
        return Err(Error::DimensionMismatch {
            context: "eigenvalue problem operand orders",
            expected: n,
            got: k.order(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let m_factor = m.cholesky_factor()?;
    let scale = k.max_abs_diag() / m.max_abs_diag().max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vector((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let nx = x.norm_two();
    if nx == 0.0 {
        x[0] = 1.0;
    } else {
        x.scale(1.0 / nx);
    }

    let mut omega_prev = None;
    for _ in 0..EIGEN_MAX_ITERATIONS {
        let y = k.matvec(&x);
        if y.norm_two() == 0.0 {
            // The iterate lies in the null space of K; with a random start
            // this only happens when K annihilates everything it sees.
            return Ok(0.0);
        }
        let omega = dot(&x, &y) / m.quadratic_form(&x);
        if let Some(prev) = omega_prev {
            if (omega - prev as f64).abs() <= EIGEN_REL_TOL * omega.abs() {
                return Ok(clamp_rayleigh(omega, scale));
            }
        }
        omega_prev = Some(omega);
        let mut z = y;
        m_factor.solve_in_place(&mut z);
        let nz = z.norm_two();
        if nz == 0.0 {
            return Ok(0.0);
        }
        z.scale(1.0 / nz);
        x = z;
    }
    Err(Error::NoConvergence {
        iterations: EIGEN_MAX_ITERATIONS,
    })
}

/// Round a barely-negative Rayleigh quotient (roundoff on a semi-definite
/// operator) up to zero; leave anything larger alone.
fn clamp_rayleigh(omega: f64, scale: f64) -> f64 {
    if omega < 0.0 && omega >= -EIGEN_REL_TOL * scale {
        0.0
    } else {
        omega
    }
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat2(a: f64, b: f64, c: f64) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap()
    }

    #[test]
    fn cholesky_solve_2x2() {
        // [[4, 2], [2, 3]] x = [8, 7] has the exact solution (1.25, 1.5).
        let a = mat2(4.0, 2.0, 3.0);
        let f = a.cholesky_factor().unwrap();
        let x = f.solve(&[8.0, 7.0]);
        assert!((x[0] - 1.25).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        // Eigenvalues 3 and -1: the second pivot is 1 - 4 = -3.
        let a = mat2(1.0, 2.0, 1.0);
        match a.cholesky_factor() {
            Err(Error::NotPositiveDefinite { pivot, index, .. }) => {
                assert_eq!(index, 1);
                assert!((pivot - (-3.0)).abs() < 1e-14);
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_rejects_zero_matrix() {
        let a = SymmetricMatrix::zeros(3);
        assert!(matches!(
            a.cholesky_factor(),
            Err(Error::NotPositiveDefinite { index: 0, .. })
        ));
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        let rows = vec![vec![1.0, 2.0], vec![2.5, 1.0]];
        assert!(matches!(
            SymmetricMatrix::from_rows(&rows),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn matvec_matches_dense_reference() {
        let rows = vec![
            vec![2.0, -1.0, 0.5],
            vec![-1.0, 3.0, 1.0],
            vec![0.5, 1.0, 4.0],
        ];
        let a = SymmetricMatrix::from_rows(&rows).unwrap();
        let x = [1.0, -2.0, 3.0];
        let y = a.matvec(&x);
        for i in 0..3 {
            let want: f64 = (0..3).map(|j| rows[i][j] * x[j]).sum();
            assert!((y[i] - want).abs() < 1e-14);
        }
        let qf = a.quadratic_form(&x);
        assert!((qf - dot(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn restrict_picks_principal_submatrix() {
        let rows = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 5.0, 6.0],
            vec![3.0, 6.0, 9.0],
        ];
        let a = SymmetricMatrix::from_rows(&rows).unwrap();
        let b = a.restrict(&[2, 0]);
        assert_eq!(b.get(0, 0), 9.0);
        assert_eq!(b.get(0, 1), 3.0);
        assert_eq!(b.get(1, 1), 1.0);
    }

    #[test]
    fn linear_comb_entrywise() {
        let a = mat2(1.0, 2.0, 3.0);
        let b = mat2(10.0, 20.0, 30.0);
        let c = SymmetricMatrix::linear_comb(2.0, &a, 0.5, &b).unwrap();
        assert_eq!(c.get(0, 0), 7.0);
        assert_eq!(c.get(1, 0), 14.0);
        assert_eq!(c.get(1, 1), 21.0);
    }

    #[test]
    fn eigen_diagonal_problem() {
        let m = SymmetricMatrix::scaled_identity(3, 1.0);
        let mut k = SymmetricMatrix::zeros(3);
        for (i, v) in [1.0, 2.0, 3.0].iter().enumerate() {
            k.set(i, i, *v);
        }
        let w = max_generalized_eigenvalue(&m, &k).unwrap();
        assert!((w - 3.0).abs() < 1e-8 * 3.0);
    }

    #[test]
    fn eigen_generalized_diagonal() {
        // Pairs K/M per axis: 2/2 = 1 and 3/1 = 3.
        let mut m = SymmetricMatrix::zeros(2);
        m.set(0, 0, 2.0);
        m.set(1, 1, 1.0);
        let mut k = SymmetricMatrix::zeros(2);
        k.set(0, 0, 2.0);
        k.set(1, 1, 3.0);
        let w = max_generalized_eigenvalue(&m, &k).unwrap();
        assert!((w - 3.0).abs() < 1e-8 * 3.0);
    }

    #[test]
    fn eigen_zero_stiffness_is_zero() {
        let m = SymmetricMatrix::scaled_identity(4, 2.0);
        let k = SymmetricMatrix::zeros(4);
        assert_eq!(max_generalized_eigenvalue(&m, &k).unwrap(), 0.0);
    }

    #[test]
    fn eigen_seed_determinism() {
        let m = SymmetricMatrix::scaled_identity(3, 1.0);
        let k = SymmetricMatrix::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let w1 = max_generalized_eigenvalue_seeded(&m, &k, 7).unwrap();
        let w2 = max_generalized_eigenvalue_seeded(&m, &k, 7).unwrap();
        assert_eq!(w1.to_bits(), w2.to_bits());
        let w3 = max_generalized_eigenvalue_seeded(&m, &k, 8).unwrap();
        // 2 + sqrt(2) is the exact top eigenvalue of the 3-point chain.
        let exact = 2.0 + 2.0f64.sqrt();
        assert!((w1 - exact).abs() < 1e-7 * exact);
        assert!((w3 - exact).abs() < 1e-7 * exact);
    }

    #[test]
    fn vector_norms() {
        let v = Vector::from(vec![3.0, -4.0, 0.0]);
        assert_eq!(v.norm_one(), 7.0);
        assert_eq!(v.norm_two(), 5.0);
        assert_eq!(v.norm_inf(), 4.0);
        assert!(v.is_finite());
        let mut w = v.clone();
        w.axpy(2.0, &[1.0, 1.0, 1.0]);
        assert_eq!(w.as_slice(), &[5.0, -2.0, 2.0]);
    }

    /// Random SPD matrix built as B B' + n I on unit-range entries.
    fn spd_strategy(n: usize) -> impl Strategy<Value = SymmetricMatrix> {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |b| {
            let mut a = SymmetricMatrix::zeros(n);
            for i in 0..n {
                for j in 0..=i {
                    let mut s = 0.0;
                    for p in 0..n {
                        s += b[i * n + p] * b[j * n + p];
                    }
                    a.add(i, j, s);
                }
                a.add(i, i, n as f64);
            }
            a
        })
    }

    proptest! {
        #[test]
        fn cholesky_solve_residual_small(
            a in spd_strategy(5),
            b in prop::collection::vec(-10.0f64..10.0, 5),
        ) {
            let f = a.cholesky_factor().unwrap();
            let x = f.solve(&b);
            let r = a.matvec(&x);
            let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..5 {
                prop_assert!((r[i] - b[i]).abs() < 1e-10 * scale);
            }
        }

        #[test]
        fn matvec_is_self_adjoint(
            a in spd_strategy(4),
            x in prop::collection::vec(-5.0f64..5.0, 4),
            y in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let ax = a.matvec(&x);
            let ay = a.matvec(&y);
            let lhs = dot(&y, &ax);
            let rhs = dot(&x, &ay);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() < 1e-10 * scale);
        }
    }
}
