//! Two-link planar elbow arm, `M(q) q'' + C(q, q') q' + G(q) = τ`.
//!
//! The dynamics are linear in the lumped parameter vector `θ ∈ R⁵`:
//!
//! ```text
//! M = [[θ1 + θ2 + 2 θ3 cos q2, θ2 + θ3 cos q2], [θ2 + θ3 cos q2, θ2]]
//! C = [[-θ3 q2' sin q2, -θ3 (q1' + q2') sin q2], [θ3 q1' sin q2, 0]]
//! G = [θ4 g cos q1 + θ5 g cos(q1 + q2), θ5 g cos(q1 + q2)]
//! ```

use nalgebra::{Matrix2, SMatrix, Vector2, Vector5};

use crate::error::{Error, Result};

pub type Regressor = SMatrix<f64, 2, 5>;

/// Determinant threshold for inverting `M`.
pub const INERTIA_DET_TOLERANCE: f64 = 1e-10;

pub const STANDARD_GRAVITY: f64 = 9.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLinkArmParams {
    pub theta: Vector5<f64>,
    pub gravity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub q: Vector2<f64>,
    pub qd: Vector2<f64>,
}

impl TwoLinkArmParams {
    pub fn new(theta: [f64; 5], gravity: f64) -> Self {
        Self {
            theta: Vector5::from(theta),
            gravity,
        }
    }

    pub fn mass_matrix(&self, q: &Vector2<f64>) -> Matrix2<f64> {
        let t = &self.theta;
        let c2 = libm::cos(q[1]);
        let off = t[1] + t[2] * c2;
        Matrix2::new(t[0] + t[1] + 2.0 * t[2] * c2, off, off, t[1])
    }

    /// `dM/dt`, which depends only on `q2` and `q2'`.
    pub fn mass_matrix_rate(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> Matrix2<f64> {
        let d = -self.theta[2] * libm::sin(q[1]) * qd[1];
        Matrix2::new(2.0 * d, d, d, 0.0)
    }

    pub fn coriolis_matrix(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> Matrix2<f64> {
        let h = self.theta[2] * libm::sin(q[1]);
        Matrix2::new(-h * qd[1], -h * (qd[0] + qd[1]), h * qd[0], 0.0)
    }

    pub fn gravity_vector(&self, q: &Vector2<f64>) -> Vector2<f64> {
        let t = &self.theta;
        let g = self.gravity;
        let c12 = libm::cos(q[0] + q[1]);
        Vector2::new(t[3] * g * libm::cos(q[0]) + t[4] * g * c12, t[4] * g * c12)
    }

    /// `q'' = M⁻¹ (τ − C q' − G)`.
    pub fn forward_dynamics(&self, state: &ArmState, tau: &Vector2<f64>) -> Result<Vector2<f64>> {
        let m = self.mass_matrix(&state.q);
        let rhs = tau
            - self.coriolis_matrix(&state.q, &state.qd) * state.qd
            - self.gravity_vector(&state.q);
        solve_2x2(&m, &rhs).ok_or(Error::SingularInertia {
            q2: state.q[1],
            det: m.determinant(),
        })
    }

    /// Scan `q2` over `[0, 2π]` and return the extreme eigenvalues of `M`.
    ///
    /// `M` does not depend on `q1`. Fails if `M` loses positive definiteness anywhere on the grid.
    pub fn inertia_bounds(&self, samples: usize) -> Result<(f64, f64)> {
        let samples = samples.max(2);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..samples {
            let q2 = 2.0 * core::f64::consts::PI * k as f64 / (samples - 1) as f64;
            let m = self.mass_matrix(&Vector2::new(0.0, q2));
            let (a, b) = sym_eigenvalues(&m);
            if !(a > 0.0) || m.determinant() <= INERTIA_DET_TOLERANCE {
                return Err(Error::SingularInertia {
                    q2,
                    det: m.determinant(),
                });
            }
            lo = lo.min(a);
            hi = hi.max(b);
        }
        Ok((lo, hi))
    }
}

// eigenvalues of a symmetric 2x2, ascending
fn sym_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let r = libm::hypot(half_diff, m[(0, 1)]);
    (mean - r, mean + r)
}

fn solve_2x2(m: &Matrix2<f64>, rhs: &Vector2<f64>) -> Option<Vector2<f64>> {
    // 2x2 symmetric: positive definite iff m00 > 0 and det > 0
    let det = m.determinant();
    if !(det > INERTIA_DET_TOLERANCE && m[(0, 0)] > 0.0) {
        return None;
    }
    Some(Vector2::new(
        (m[(1, 1)] * rhs[0] - m[(0, 1)] * rhs[1]) / det,
        (m[(0, 0)] * rhs[1] - m[(1, 0)] * rhs[0]) / det,
    ))
}

/// Regressor `Y(q, q', a, a')` with `Y θ = M(q) a + C(q, q') a' + G(q)` for every `θ`.
pub fn regressor(
    gravity: f64,
    q: &Vector2<f64>,
    qd: &Vector2<f64>,
    a: &Vector2<f64>,
    ad: &Vector2<f64>,
) -> Regressor {
    let (s2, c2) = libm::sincos(q[1]);
    let c1 = libm::cos(q[0]);
    let c12 = libm::cos(q[0] + q[1]);
    let a12 = a[0] + a[1];
    Regressor::from_row_slice(&[
        a[0],
        a12,
        2.0 * c2 * a[0] + c2 * a[1] - s2 * qd[1] * ad[0] - s2 * (qd[0] + qd[1]) * ad[1],
        gravity * c1,
        gravity * c12,
        //
        0.0,
        a12,
        c2 * a[0] + s2 * qd[0] * ad[0],
        0.0,
        gravity * c12,
    ])
}
