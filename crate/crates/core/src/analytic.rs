//! Closed-form reference solutions for the experiment problems: separable
//! cosine modes for the insulated 1D/2D heat problems, the Fourier series
//! for the bar with one insulated and one held end, and the exact coupled
//! trajectory of the two-mass split-unknown system.

use std::sync::Arc;

use std::f64::consts::PI;

/// Series truncation: stop once a term magnitude falls below this.
pub const SERIES_TERM_TOL: f64 = 1e-14;
/// Hard cap on series length regardless of the requested term count.
pub const MAX_SERIES_TERMS: usize = 10_000;

/// Temperature for the insulated-boundary 1D problem on `[0, 2]` with
/// initial profile `cos(pi x / 2)`:
/// `u(x,t) = exp(-(k/rho_cp) (pi^2/4) t) cos(pi x / 2)`.
pub fn heat1d_neumann(x: f64, t: f64, k: f64, rho_cp: f64) -> f64 {
    (-(k / rho_cp) * (PI * PI / 4.0) * t).exp() * (PI * x / 2.0).cos()
}

/// Temperature for the insulated-boundary 2D problem on `[0, 2]^2` with
/// initial profile `cos(pi x / 2) cos(pi y / 2)`:
/// `u = exp(-(k/rho_cp) (pi^2/2) t) cos(pi x / 2) cos(pi y / 2)`.
pub fn heat2d_neumann(x: f64, y: f64, t: f64, k: f64, rho_cp: f64) -> f64 {
    (-(k / rho_cp) * (PI * PI / 2.0) * t).exp() * (PI * x / 2.0).cos() * (PI * y / 2.0).cos()
}

/// Temperature for the unit-diffusivity bar on `[0, L]`, insulated at
/// `x = 0`, held at zero at `x = L`, starting from `u = 1`:
///
/// `u(x,t) = (4/pi) sum_n ((-1)^n / (2n+1)) cos(l_n x) exp(-l_n^2 t)`
///
/// with `l_n = (2n+1) pi / (2L)`. Terms are added until their magnitude
/// falls below [`SERIES_TERM_TOL`] or `n_terms` (capped at
/// [`MAX_SERIES_TERMS`]) have been used.
pub fn heat1d_mixed_series(x: f64, t: f64, l: f64, n_terms: usize) -> f64 {
    let mut sum = 0.0;
    for n in 0..n_terms.min(MAX_SERIES_TERMS) {
        let odd = (2 * n + 1) as f64;
        let lambda = odd * PI / (2.0 * l);
        let coef = (4.0 / PI) * if n % 2 == 0 { 1.0 } else { -1.0 } / odd;
        let magnitude = coef.abs() * (-lambda * lambda * t).exp();
        if magnitude < SERIES_TERM_TOL {
            break;
        }
        sum += coef * (-lambda * lambda * t).exp() * (lambda * x).cos();
    }
    sum
}

/// Exact trajectory of the two-mass split-unknown system
/// `m_a u' = -k_a u + lambda`, `m_b u' = -k_b u - lambda` with a shared
/// unknown `u(0) = u0`. Eliminating the constraint gives the assembled decay
/// `u(t) = u0 exp(-(k_a + k_b) t / (m_a + m_b))`; the interface force then
/// follows from subdomain A's balance:
/// `lambda(t) = ((k_a m_b - k_b m_a) / (m_a + m_b)) u(t)`.
pub fn split_dof_exact(t: f64, m_a: f64, m_b: f64, k_a: f64, k_b: f64, u0: f64) -> (f64, f64) {
    assert!(m_a > 0.0 && m_b > 0.0, "masses must be positive");
    let u = u0 * (-(k_a + k_b) * t / (m_a + m_b)).exp();
    let lambda = (k_a * m_b - k_b * m_a) / (m_a + m_b) * u;
    (u, lambda)
}

/// A reference solution bundled with a human-readable tag, for generic
/// error reporting in the experiment drivers.
#[derive(Clone)]
pub struct AnalyticSolution {
    description: &'static str,
    eval: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
}

impl AnalyticSolution {
    /// Evaluate at a spatial point (1 or 2 coordinates) and time.
    pub fn evaluate(&self, point: &[f64], time: f64) -> f64 {
        (self.eval)(point, time)
    }

    pub fn description(&self) -> &'static str {
        self.description
    }

    pub fn heat1d_neumann(k: f64, rho_cp: f64) -> Self {
        AnalyticSolution {
            description: "1d insulated-boundary cosine mode",
            eval: Arc::new(move |p, t| heat1d_neumann(p[0], t, k, rho_cp)),
        }
    }

    pub fn heat2d_neumann(k: f64, rho_cp: f64) -> Self {
        AnalyticSolution {
            description: "2d insulated-boundary cosine mode",
            eval: Arc::new(move |p, t| heat2d_neumann(p[0], p[1], t, k, rho_cp)),
        }
    }

    pub fn heat1d_mixed(l: f64, n_terms: usize) -> Self {
        AnalyticSolution {
            description: "1d insulated/held bar series",
            eval: Arc::new(move |p, t| heat1d_mixed_series(p[0], t, l, n_terms)),
        }
    }
}

impl std::fmt::Debug for AnalyticSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticSolution")
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    /// Central first difference in time with the pinned increment.
    fn d_dt(f: impl Fn(f64) -> f64, t: f64) -> f64 {
        let dt = 1e-5;
        (f(t + dt) - f(t - dt)) / (2.0 * dt)
    }

    /// Central second difference in space. The increment is larger than the
    /// time one so that cancellation noise (~eps/h^2) stays well under the
    /// 1e-6 residual budget while the stencil truncation (~h^2) does too.
    fn d2_dx(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-4;
        (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    }

    #[test]
    fn heat1d_pointwise_values() {
        assert_eq!(heat1d_neumann(0.0, 0.0, 1.0, 1.0), 1.0);
        assert!(heat1d_neumann(1.0, 3.7, 1.0, 1.0).abs() < 1e-15);
        let want = (-PI * PI / 4.0).exp(); // 0.0848050...
        assert!((heat1d_neumann(0.0, 1.0, 1.0, 1.0) - want).abs() < 1e-15);
        assert!((want - 0.084_804_972_471_113_78).abs() < 1e-15);
    }

    #[test]
    fn heat1d_satisfies_pde() {
        let (k, rho_cp) = (2.0, 3.0);
        for &x in &[0.1, 0.7, 1.5, 1.9] {
            for &t in &[0.05, 0.4, 1.0] {
                let ut = d_dt(|tt| heat1d_neumann(x, tt, k, rho_cp), t);
                let uxx = d2_dx(|xx| heat1d_neumann(xx, t, k, rho_cp), x);
                assert!(
                    (rho_cp * ut - k * uxx).abs() < 1e-6,
                    "residual at ({x}, {t})"
                );
            }
        }
    }

    #[test]
    fn heat2d_pointwise_and_separability() {
        assert_eq!(heat2d_neumann(0.0, 0.0, 0.0, 1.0, 1.0), 1.0);
        assert!(heat2d_neumann(1.0, 0.3, 0.9, 1.0, 1.0).abs() < 1e-15);
        for &(x, y, t) in &[(0.3, 1.7, 0.2), (1.2, 0.4, 1.5)] {
            let undecayed =
                heat2d_neumann(x, y, t, 1.0, 1.0) * ((PI * PI / 2.0) * t).exp();
            let product = (PI * x / 2.0).cos() * (PI * y / 2.0).cos();
            assert!((undecayed - product).abs() < 1e-12 * product.abs().max(1.0));
        }
    }

    #[test]
    fn heat2d_satisfies_pde() {
        let (k, rho_cp) = (1.0, 1.0);
        for &(x, y) in &[(0.4, 0.8), (1.6, 0.2), (0.9, 1.3)] {
            for &t in &[0.1, 0.6] {
                let ut = d_dt(|tt| heat2d_neumann(x, y, tt, k, rho_cp), t);
                let uxx = d2_dx(|xx| heat2d_neumann(xx, y, t, k, rho_cp), x);
                let uyy = d2_dx(|yy| heat2d_neumann(x, yy, t, k, rho_cp), y);
                assert!(
                    (rho_cp * ut - k * (uxx + uyy)).abs() < 1e-6,
                    "residual at ({x}, {y}, {t})"
                );
            }
        }
    }

    #[test]
    fn mixed_series_boundary_and_initial_values() {
        // Held end is exactly zero term by term.
        for &t in &[0.01, 0.5, 3.0] {
            assert!(heat1d_mixed_series(2.0, t, 2.0, 500).abs() < 1e-12);
        }
        // At the insulated end the t=0 series is the Leibniz-type sum -> 1.
        let u00 = heat1d_mixed_series(0.0, 0.0, 2.0, MAX_SERIES_TERMS);
        assert!((u00 - 1.0).abs() < 1e-3, "got {u00}");
    }

    #[test]
    fn mixed_series_satisfies_pde() {
        for &x in &[0.3, 1.1, 1.8] {
            for &t in &[0.2, 0.8] {
                let ut = d_dt(|tt| heat1d_mixed_series(x, tt, 2.0, 2000), t);
                let uxx = d2_dx(|xx| heat1d_mixed_series(xx, t, 2.0, 2000), x);
                assert!((ut - uxx).abs() < 1e-6, "residual at ({x}, {t})");
            }
        }
    }

    #[test]
    fn mixed_series_leading_term_dominates_late() {
        // Once the second mode has decayed away the sum equals its first term.
        let l = 2.0;
        let t = 6.0;
        let lambda0 = PI / (2.0 * l);
        let leading = (4.0 / PI) * (-lambda0 * lambda0 * t).exp();
        let got = heat1d_mixed_series(0.0, t, l, 1000);
        assert!((got - leading).abs() < 1e-12 * leading);
    }

    #[test]
    fn mixed_series_partial_sums_alternate() {
        // At the insulated end the terms alternate with shrinking magnitude,
        // so partial sums bracket the limit with a tightening envelope.
        let (x, t, l) = (0.0, 0.01, 2.0);
        let limit = heat1d_mixed_series(x, t, l, MAX_SERIES_TERMS);
        let mut prev_err = f64::INFINITY;
        let mut prev_sign = 0.0;
        for n in 1..=25 {
            let err = heat1d_mixed_series(x, t, l, n) - limit;
            assert!(err.abs() <= prev_err, "envelope widened at {n}");
            if prev_sign != 0.0 {
                assert!(err * prev_sign < 0.0, "no sign flip at {n}");
            }
            prev_sign = err.signum();
            prev_err = err.abs();
        }
    }

    #[test]
    fn split_dof_reference_values() {
        let (u, lambda) = split_dof_exact(0.0, 1.0, 1.0, 10.0, 1.0, 1.0);
        assert_eq!(u, 1.0);
        assert_eq!(lambda, 4.5);
        let (u, lambda) = split_dof_exact(0.69, 1.0, 1.0, 10.0, 1.0, 1.0);
        assert!((u - 0.02245).abs() < 1e-4);
        assert!((lambda - 0.1010).abs() < 1e-3);
        // Symmetric parameters carry no interface force.
        for &t in &[0.0, 0.3, 2.0] {
            let (_, lambda) = split_dof_exact(t, 2.0, 2.0, 5.0, 5.0, 1.0);
            assert_eq!(lambda, 0.0);
        }
    }

    #[test]
    fn split_dof_satisfies_subdomain_balance() {
        let (m_a, m_b, k_a, k_b, u0) = (1.0, 1.0, 10.0, 1.0, 1.0);
        for &t in &[0.05, 0.3, 0.69] {
            let (u, lambda) = split_dof_exact(t, m_a, m_b, k_a, k_b, u0);
            let du = d_dt(|tt| split_dof_exact(tt, m_a, m_b, k_a, k_b, u0).0, t);
            // Assembled balance and subdomain A's balance with the force.
            assert!(((m_a + m_b) * du + (k_a + k_b) * u).abs() < 1e-6);
            assert!((m_a * du + k_a * u - lambda).abs() < 1e-6);
        }
    }

    #[test]
    fn wrapped_evaluators_match_free_functions() {
        let s1 = AnalyticSolution::heat1d_neumann(2.0, 3.0);
        assert_eq!(s1.evaluate(&[0.4], 0.7), heat1d_neumann(0.4, 0.7, 2.0, 3.0));
        let s2 = AnalyticSolution::heat2d_neumann(1.0, 1.0);
        assert_eq!(
            s2.evaluate(&[0.4, 1.1], 0.7),
            heat2d_neumann(0.4, 1.1, 0.7, 1.0, 1.0)
        );
        let s3 = AnalyticSolution::heat1d_mixed(2.0, 400);
        assert_eq!(s3.evaluate(&[0.5], 0.2), heat1d_mixed_series(0.5, 0.2, 2.0, 400));
        assert!(!s3.description().is_empty());
    }
}
