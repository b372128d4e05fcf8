//! Observer-based adaptive synchronization law for Euler-Lagrange followers.
//!
//! Each follower tracks `E v̂_i` from its own observer:
//!
//! ```text
//! q̂_i'  = E φ(v̂_i) ω̂_i − α (q_i − E v̂_i)
//! s_i   = q_i' − q̂_i'
//! τ_i   = −K_i s_i + Y_i θ̂_i,      Y_i = Y(q_i, q_i', q̂_i'', q̂_i')
//! θ̂_i'  = −Γ_i Y_iᵀ s_i
//! ```
//!
//! The controller never sees the true arm parameters.

use alloc::format;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector5};

use crate::error::{Error, Result};
use crate::lagrange::Regressor;
use crate::leader::LeaderModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    k: Matrix2<f64>,
    gamma: Vector5<f64>,
    alpha: f64,
}

impl ControllerGains {
    /// `k` must be symmetric positive definite, every `gamma` entry and `alpha` positive.
    pub fn new(k: Matrix2<f64>, gamma: Vector5<f64>, alpha: f64) -> Result<Self> {
        if k[(0, 1)] != k[(1, 0)] || !(k[(0, 0)] > 0.0) || !(k.determinant() > 0.0) {
            return Err(Error::InvalidGain(
                "K must be symmetric positive definite".into(),
            ));
        }
        if gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidGain(
                "Gamma diagonal entries must be positive".into(),
            ));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidGain(format!(
                "alpha must be positive (got {alpha})"
            )));
        }
        Ok(Self { k, gamma, alpha })
    }

    /// `K = k I₂`, `Γ = γ I₅`.
    pub fn scalar(k: f64, gamma: f64, alpha: f64) -> Result<Self> {
        Self::new(Matrix2::identity() * k, Vector5::repeat(gamma), alpha)
    }

    pub fn k(&self) -> &Matrix2<f64> {
        &self.k
    }

    pub fn gamma(&self) -> &Vector5<f64> {
        &self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

fn to_vec2(x: DVector<f64>) -> Vector2<f64> {
    Vector2::new(x[0], x[1])
}

fn check_output(model: &LeaderModel) -> Result<()> {
    if model.output_dim() != 2 {
        return Err(Error::DimensionMismatch {
            what: "leader output (two-link arm)",
            expected: 2,
            got: model.output_dim(),
        });
    }
    Ok(())
}

/// Reference velocity `q̂' = E φ(v̂) ω̂ − α (q − E v̂)`.
pub fn ref_velocity(
    model: &LeaderModel,
    v_hat: &[f64],
    omega_hat: &[f64],
    q: &Vector2<f64>,
    alpha: f64,
) -> Result<Vector2<f64>> {
    check_output(model)?;
    let e = model.output_matrix();
    let drift = to_vec2(e * model.eval_p(v_hat, omega_hat)?);
    let tracked = to_vec2(model.output(v_hat)?);
    Ok(drift - (q - tracked) * alpha)
}

/// Reference acceleration, the exact time derivative of [`ref_velocity`]:
/// `E φ(v̂) ω̂' + E (dφ/dt) ω̂ − α (q' − E v̂')`.
pub fn ref_acceleration(
    model: &LeaderModel,
    v_hat: &[f64],
    omega_hat: &[f64],
    omega_hat_dot: &[f64],
    v_hat_dot: &[f64],
    qd: &Vector2<f64>,
    alpha: f64,
) -> Result<Vector2<f64>> {
    check_output(model)?;
    let e: &DMatrix<f64> = model.output_matrix();
    let learn = model.eval_p(v_hat, omega_hat_dot)?;
    let phi_rate = model.regressor_rate(v_hat, v_hat_dot)?;
    let omega_hat = DVector::from_column_slice(omega_hat);
    let drift = to_vec2(e * (learn + phi_rate * omega_hat));
    let tracked_rate = to_vec2(e * DVector::from_column_slice(v_hat_dot));
    Ok(drift - (qd - tracked_rate) * alpha)
}

pub fn sliding_error(qd: &Vector2<f64>, q_hat_dot: &Vector2<f64>) -> Vector2<f64> {
    qd - q_hat_dot
}

/// `τ = −K s + Y θ̂`.
pub fn control_torque(
    gains: &ControllerGains,
    y: &Regressor,
    s: &Vector2<f64>,
    theta_hat: &Vector5<f64>,
) -> Vector2<f64> {
    y * theta_hat - gains.k * s
}

/// `θ̂' = −Γ Yᵀ s`.
pub fn theta_hat_derivative(
    gains: &ControllerGains,
    y: &Regressor,
    s: &Vector2<f64>,
) -> Vector5<f64> {
    -(y.tr_mul(s)).component_mul(&gains.gamma)
}
