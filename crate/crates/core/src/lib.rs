//! Distributed learning observer for an uncertain nonlinear leader and adaptive
//! leader-following synchronization of two-link Euler-Lagrange arms.
//!
//! `no_std` with `alloc`. Modules, bottom up:
//!
//! - [`graph`]: communication topology, Laplacian and `H` matrix
//! - [`leader`]: leader dynamics `v' = φ(v) ω` with unknown `ω`
//! - [`observer`]: per-follower estimates of `v` and `ω` with adaptive coupling gain
//! - [`lagrange`]: two-link arm model and its linear-in-parameters regressor
//! - [`controller`]: observer-based adaptive torque law
//! - [`sim`]: coupled fixed-step RK4 integration and logging
//! - [`analysis`]: excitation, Lyapunov and convergence diagnostics

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod controller;
pub mod error;
pub mod graph;
pub mod integrate;
pub mod lagrange;
pub mod leader;
pub mod observer;
pub mod sim;

pub use error::{Error, Result, TopologyViolation};
pub use graph::{CommGraph, HMatrix};
pub use leader::LeaderModel;
pub use sim::{run, Scenario, SimLog};
