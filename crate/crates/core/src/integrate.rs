//! Classical fixed-step fourth-order Runge-Kutta.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// RK4 stepper with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.k1.len()
    }

    /// Advance `x` from `t` to `t + dt` in place.
    ///
    /// `f(t, x, dx)` writes the derivative into `dx`. A non-finite derivative
    /// entry aborts the step and leaves `x` untouched.
    pub fn step<F>(&mut self, mut f: F, t: f64, dt: f64, x: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        assert_eq!(x.len(), self.dim(), "state dimension");
        let half = 0.5 * dt;

        eval(&mut f, t, x, &mut self.k1)?;
        axpy(&mut self.stage, x, half, &self.k1);
        eval(&mut f, t + half, &self.stage, &mut self.k2)?;
        axpy(&mut self.stage, x, half, &self.k2);
        eval(&mut f, t + half, &self.stage, &mut self.k3)?;
        axpy(&mut self.stage, x, dt, &self.k3);
        eval(&mut f, t + dt, &self.stage, &mut self.k4)?;

        let sixth = dt / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        Ok(())
    }
}

fn eval<F>(f: &mut F, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    f(t, x, dx)?;
    if let Some(component) = dx.iter().position(|d| !d.is_finite()) {
        return Err(Error::NonFiniteDerivative { t, component });
    }
    Ok(())
}

fn axpy(out: &mut [f64], x: &[f64], h: f64, k: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + h * ki;
    }
}

/// One RK4 step returning the new state.
pub fn rk4_step<F>(f: F, x: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut out = x.to_vec();
    Rk4::new(x.len()).step(f, t, dt, &mut out)?;
    Ok(out)
}
