//! Learning-based fully distributed observer.
//!
//! Every follower `i` runs
//!
//! ```text
//! z_i  = Σ_{j ∈ N_i} (v̂_j − v̂_i)            (v̂_{N+1} = v, the leader state)
//! v̂_i' = φ(v̂_i) ω̂_i + κ̂_i ρ_i(z_i) z_i
//! ω̂_i' = μ φ(v̂_i)ᵀ z_i
//! κ̂_i' = ρ_i(z_i) z_iᵀ z_i
//! ```
//!
//! using only its neighbors' estimates. No follower knows `ω`, and no global
//! graph quantity enters the design: the adaptive gain `κ̂_i` replaces the
//! unknown sufficient coupling gain.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::leader::LeaderModel;

/// Polynomial gain `ρ(z) = offset + Σ_k c_k ‖z‖^k`, bounded below by one.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSpec {
    coefficients: Vec<f64>,
    offset: f64,
}

impl RhoSpec {
    pub fn new(coefficients: Vec<f64>, offset: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidGain(
                "rho needs at least one coefficient".into(),
            ));
        }
        if coefficients.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidGain(
                "rho coefficients must be nonnegative".into(),
            ));
        }
        if !coefficients.iter().any(|&c| c > 0.0) {
            return Err(Error::InvalidGain(
                "rho needs a strictly positive coefficient".into(),
            ));
        }
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::InvalidGain("rho offset must be nonnegative".into()));
        }
        if offset + coefficients[0] < 1.0 {
            return Err(Error::InvalidGain(format!(
                "rho(0) = {} < 1",
                offset + coefficients[0]
            )));
        }
        Ok(Self {
            coefficients,
            offset,
        })
    }

    /// `a Σ_{k=0}^{2 m0 - 2} ‖z‖^k + b` for a polynomial leader of degree `m0`.
    pub fn for_polynomial_leader(m0: u32, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidGain(format!(
                "rho weights must be positive (a = {a}, b = {b})"
            )));
        }
        if m0 == 0 {
            return Err(Error::InvalidGain(
                "polynomial degree must be at least 1".into(),
            ));
        }
        let len = 2 * m0 as usize - 1;
        Self::new(vec![a; len], b)
    }

    /// `2 + 6 (‖z‖ + ‖z‖² + ‖z‖³ + ‖z‖⁴)`, the gain used by the six-arm reference run.
    pub fn reference() -> Self {
        Self::new(vec![0.0, 6.0, 6.0, 6.0, 6.0], 2.0).expect("reference rho is valid")
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Gain as a function of `‖z‖`.
    pub fn eval_norm(&self, norm: f64) -> f64 {
        // Horner in ‖z‖
        let poly = self
            .coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * norm + c);
        self.offset + poly
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.eval_norm(norm(z))
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|a| a * a).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverNodeState {
    pub v_hat: DVector<f64>,
    pub omega_hat: DVector<f64>,
    pub kappa_hat: f64,
}

/// Right-hand side of one node's observer at an instant.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRates {
    pub z: DVector<f64>,
    pub rho: f64,
    pub v_hat_dot: DVector<f64>,
    pub omega_hat_dot: DVector<f64>,
    pub kappa_hat_dot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverBank {
    pub nodes: Vec<ObserverNodeState>,
    mu: f64,
    rho: Vec<RhoSpec>,
}

impl ObserverBank {
    pub fn new(nodes: Vec<ObserverNodeState>, mu: f64, rho: Vec<RhoSpec>) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidGain(format!(
                "mu must be positive (got {mu})"
            )));
        }
        if rho.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                what: "rho specs",
                expected: nodes.len(),
                got: rho.len(),
            });
        }
        Ok(Self { nodes, mu, rho })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn rho(&self) -> &[RhoSpec] {
        &self.rho
    }

    fn check(&self, graph: &CommGraph, model: &LeaderModel, leader_v: &[f64]) -> Result<()> {
        if self.nodes.len() != graph.num_followers() {
            return Err(Error::DimensionMismatch {
                what: "observer nodes",
                expected: graph.num_followers(),
                got: self.nodes.len(),
            });
        }
        let m = model.state_dim();
        let l = model.param_dim();
        if leader_v.len() != m {
            return Err(Error::DimensionMismatch {
                what: "leader state",
                expected: m,
                got: leader_v.len(),
            });
        }
        for node in &self.nodes {
            if node.v_hat.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "state estimate",
                    expected: m,
                    got: node.v_hat.len(),
                });
            }
            if node.omega_hat.len() != l {
                return Err(Error::DimensionMismatch {
                    what: "parameter estimate",
                    expected: l,
                    got: node.omega_hat.len(),
                });
            }
        }
        Ok(())
    }
}

/// Neighborhood error of follower `i` (zero-based).
pub fn neighborhood_error(
    bank: &ObserverBank,
    graph: &CommGraph,
    leader_v: &[f64],
    i: usize,
) -> Result<DVector<f64>> {
    let n = graph.num_followers();
    if i >= n || i >= bank.nodes.len() {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    let own = &bank.nodes[i].v_hat;
    if leader_v.len() != own.len() {
        return Err(Error::DimensionMismatch {
            what: "leader state",
            expected: own.len(),
            got: leader_v.len(),
        });
    }
    let mut z = DVector::zeros(own.len());
    for &j in graph.in_neighbors(i) {
        let other = if j == graph.leader_index() {
            leader_v
        } else {
            bank.nodes[j].v_hat.as_slice()
        };
        for k in 0..z.len() {
            z[k] += other[k] - own[k];
        }
    }
    Ok(z)
}

/// Observer right-hand side for every node.
pub fn observer_derivatives(
    bank: &ObserverBank,
    graph: &CommGraph,
    model: &LeaderModel,
    leader_v: &[f64],
) -> Result<Vec<NodeRates>> {
    bank.check(graph, model, leader_v)?;
    (0..bank.nodes.len())
        .map(|i| {
            let z = neighborhood_error(bank, graph, leader_v, i)?;
            let node = &bank.nodes[i];
            Ok(node_rates(
                model,
                &bank.rho[i],
                bank.mu,
                node.v_hat.as_slice(),
                node.omega_hat.as_slice(),
                node.kappa_hat,
                z,
            ))
        })
        .collect()
}

/// One node's rates given its own state and neighborhood error.
pub(crate) fn node_rates(
    model: &LeaderModel,
    rho: &RhoSpec,
    mu: f64,
    v_hat: &[f64],
    omega_hat: &[f64],
    kappa_hat: f64,
    z: DVector<f64>,
) -> NodeRates {
    let phi = model.eval_phi(v_hat).expect("dimensions checked by caller");
    let omega_hat = DVector::from_column_slice(omega_hat);
    let zz = z.dot(&z);
    let rho_val = rho.eval_norm(libm::sqrt(zz));
    let v_hat_dot = &phi * &omega_hat + &z * (kappa_hat * rho_val);
    let omega_hat_dot = phi.tr_mul(&z) * mu;
    NodeRates {
        rho: rho_val,
        v_hat_dot,
        omega_hat_dot,
        kappa_hat_dot: rho_val * zz,
        z,
    }
}
