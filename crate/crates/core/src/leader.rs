//! Uncertain nonlinear leader `v' = φ(v) ω`, output `q = E v`.
//!
//! The regressor `φ` is known to every follower, the parameter vector `ω` is
//! not. Two regressor families are provided: the Van der Pol oscillator and a
//! general polynomial regressor built from monomials.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One monomial `coef * Π v_k^powers[k]` contributing to entry `(row, col)` of `φ(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub row: usize,
    pub col: usize,
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    fn eval(&self, v: &[f64]) -> f64 {
        self.powers
            .iter()
            .zip(v)
            .fold(self.coef, |acc, (&p, &x)| acc * powi(x, p))
    }

    // d/dt along v' = vdot
    fn rate(&self, v: &[f64], vdot: &[f64]) -> f64 {
        let mut total = 0.0;
        for (k, &pk) in self.powers.iter().enumerate() {
            if pk == 0 || vdot[k] == 0.0 {
                continue;
            }
            let mut term = self.coef * pk as f64 * vdot[k];
            for (j, (&pj, &x)) in self.powers.iter().zip(v).enumerate() {
                let p = if j == k { pj - 1 } else { pj };
                term *= powi(x, p);
            }
            total += term;
        }
        total
    }

    fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

fn powi(x: f64, p: u32) -> f64 {
    (0..p).fold(1.0, |acc, _| acc * x)
}

/// Regressor whose entries are sums of monomials in the state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialRegressor {
    state_dim: usize,
    param_dim: usize,
    terms: Vec<Monomial>,
}

impl PolynomialRegressor {
    pub fn new(state_dim: usize, param_dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if state_dim == 0 || param_dim == 0 {
            return Err(Error::InvalidModel(
                "regressor dimensions must be positive".into(),
            ));
        }
        for t in &terms {
            if t.row >= state_dim || t.col >= param_dim {
                return Err(Error::InvalidModel(format!(
                    "monomial entry ({}, {}) outside {state_dim}x{param_dim} regressor",
                    t.row, t.col
                )));
            }
            if t.powers.len() != state_dim {
                return Err(Error::DimensionMismatch {
                    what: "monomial powers",
                    expected: state_dim,
                    got: t.powers.len(),
                });
            }
            if t.degree() == 0 && t.coef != 0.0 {
                return Err(Error::InvalidModel(
                    "constant regressor term: the leader vector field must vanish at the origin"
                        .into(),
                ));
            }
            if !t.coef.is_finite() {
                return Err(Error::InvalidModel(
                    "non-finite monomial coefficient".into(),
                ));
            }
        }
        Ok(Self {
            state_dim,
            param_dim,
            terms,
        })
    }

    /// The Van der Pol regressor written as monomials.
    pub fn van_der_pol() -> Self {
        let m = |row, col, coef, powers: [u32; 2]| Monomial {
            row,
            col,
            coef,
            powers: powers.to_vec(),
        };
        Self::new(
            2,
            3,
            alloc::vec![
                m(0, 0, 1.0, [0, 1]),
                m(1, 1, -1.0, [1, 0]),
                m(1, 2, 1.0, [0, 1]),
                m(1, 2, -1.0, [2, 1]),
            ],
        )
        .expect("van der pol monomials are valid")
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(Monomial::degree)
            .max()
            .unwrap_or(1)
            .max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    /// `φ(v) = [[v2, 0, 0], [0, -v1, (1 - v1²) v2]]`, `ω = (a, b, c)`.
    VanDerPol,
    Polynomial(PolynomialRegressor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderModel {
    regressor: Regressor,
    state_dim: usize,
    param_dim: usize,
    output: DMatrix<f64>,
    true_params: DVector<f64>,
}

impl LeaderModel {
    /// Van der Pol leader with `ω = (a, b, c)` and identity output.
    pub fn van_der_pol(omega: [f64; 3]) -> Self {
        Self {
            regressor: Regressor::VanDerPol,
            state_dim: 2,
            param_dim: 3,
            output: DMatrix::identity(2, 2),
            true_params: DVector::from_column_slice(&omega),
        }
    }

    /// Polynomial leader with identity output.
    pub fn polynomial(regressor: PolynomialRegressor, omega: &[f64]) -> Result<Self> {
        if omega.len() != regressor.param_dim {
            return Err(Error::DimensionMismatch {
                what: "leader parameters",
                expected: regressor.param_dim,
                got: omega.len(),
            });
        }
        let m = regressor.state_dim;
        Ok(Self {
            state_dim: m,
            param_dim: regressor.param_dim,
            regressor: Regressor::Polynomial(regressor),
            output: DMatrix::identity(m, m),
            true_params: DVector::from_column_slice(omega),
        })
    }

    /// Replace the output matrix `E` (must have `state_dim` columns).
    pub fn with_output(mut self, output: DMatrix<f64>) -> Result<Self> {
        if output.ncols() != self.state_dim || output.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                what: "output matrix columns",
                expected: self.state_dim,
                got: output.ncols(),
            });
        }
        self.output = output;
        Ok(self)
    }

    pub fn regressor(&self) -> &Regressor {
        &self.regressor
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output.nrows()
    }

    pub fn output_matrix(&self) -> &DMatrix<f64> {
        &self.output
    }

    pub fn true_params(&self) -> &DVector<f64> {
        &self.true_params
    }

    /// Largest polynomial degree `m0` of the vector field.
    pub fn poly_degree(&self) -> u32 {
        match &self.regressor {
            Regressor::VanDerPol => 3,
            Regressor::Polynomial(p) => p.degree(),
        }
    }

    fn check_state(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                what: "leader state",
                expected: self.state_dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Regressor matrix `φ(v)`, `m x l`.
    pub fn eval_phi(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        self.check_state(v)?;
        let mut phi = DMatrix::zeros(self.state_dim, self.param_dim);
        match &self.regressor {
            Regressor::VanDerPol => {
                phi[(0, 0)] = v[1];
                phi[(1, 1)] = -v[0];
                phi[(1, 2)] = (1.0 - v[0] * v[0]) * v[1];
            }
            Regressor::Polynomial(p) => {
                for t in &p.terms {
                    phi[(t.row, t.col)] += t.eval(v);
                }
            }
        }
        Ok(phi)
    }

    /// Time derivative of `φ(v(t))` given `v' = vdot`.
    pub fn regressor_rate(&self, v: &[f64], vdot: &[f64]) -> Result<DMatrix<f64>> {
        self.check_state(v)?;
        self.check_state(vdot)?;
        let mut rate = DMatrix::zeros(self.state_dim, self.param_dim);
        match &self.regressor {
            Regressor::VanDerPol => {
                rate[(0, 0)] = vdot[1];
                rate[(1, 1)] = -vdot[0];
                rate[(1, 2)] = -2.0 * v[0] * vdot[0] * v[1] + (1.0 - v[0] * v[0]) * vdot[1];
            }
            Regressor::Polynomial(p) => {
                for t in &p.terms {
                    rate[(t.row, t.col)] += t.rate(v, vdot);
                }
            }
        }
        Ok(rate)
    }

    /// `p(v, ω) = φ(v) ω`.
    pub fn eval_p(&self, v: &[f64], omega: &[f64]) -> Result<DVector<f64>> {
        if omega.len() != self.param_dim {
            return Err(Error::DimensionMismatch {
                what: "leader parameters",
                expected: self.param_dim,
                got: omega.len(),
            });
        }
        let phi = self.eval_phi(v)?;
        Ok(phi * DVector::from_column_slice(omega))
    }

    /// Leader vector field with the true parameters.
    pub fn vector_field(&self, v: &[f64]) -> Result<DVector<f64>> {
        self.eval_p(v, self.true_params.as_slice())
    }

    /// Leader output `E v`.
    pub fn output(&self, v: &[f64]) -> Result<DVector<f64>> {
        self.check_state(v)?;
        Ok(&self.output * DVector::from_column_slice(v))
    }
}
