//! Post-run diagnostics: persistent-excitation Gram windows, Lyapunov
//! reconstructions and trailing-window convergence metrics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::HMatrix;
use crate::leader::LeaderModel;
use crate::observer::norm;
use crate::sim::{Scenario, SimLog};

/// Sliding-window excitation levels of a sampled matrix signal.
#[derive(Debug, Clone, PartialEq)]
pub struct PEReport {
    pub window: f64,
    pub t0: f64,
    /// Infimum over all windows, the empirical `ε`.
    pub min_gram_eigenvalue: f64,
    pub window_starts: Vec<f64>,
    pub min_eigenvalues: Vec<f64>,
}

fn outer_upper(f: &DMatrix<f64>) -> Vec<f64> {
    // upper triangle of f fᵀ, row-major
    let n = f.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            out.push(f.row(a).dot(&f.row(b)));
        }
    }
    out
}

fn unpack(n: usize, upper: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for a in 0..n {
        for b in a..n {
            m[(a, b)] = upper[k];
            m[(b, a)] = upper[k];
            k += 1;
        }
    }
    m
}

/// Windowed Gram `(1/T0) ∫_t^{t+T0} f fᵀ ds` by the trapezoid rule on the sample grid.
///
/// Windows start at every sample time `t ≥ t0` whose window fits inside the
/// record; a window ending between samples uses the linearly interpolated integrand.
pub fn gram_windows(
    times: &[f64],
    signal: &[DMatrix<f64>],
    window: f64,
    t0: f64,
) -> Result<PEReport> {
    if times.len() != signal.len() {
        return Err(Error::DimensionMismatch {
            what: "signal samples",
            expected: times.len(),
            got: signal.len(),
        });
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InsufficientSamples(format!(
            "window must be positive (got {window})"
        )));
    }
    if times.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least two samples".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InsufficientSamples(
            "sample times must increase".into(),
        ));
    }
    let t_last = times[times.len() - 1];
    if t0 < times[0] || t0 + window > t_last {
        return Err(Error::InsufficientSamples(format!(
            "samples cover [{}, {t_last}], need [{t0}, {}]",
            times[0],
            t0 + window
        )));
    }

    let n = signal[0].nrows();
    if signal.iter().any(|f| f.nrows() != n) {
        return Err(Error::DimensionMismatch {
            what: "signal rows",
            expected: n,
            got: signal
                .iter()
                .find(|f| f.nrows() != n)
                .map_or(0, |f| f.nrows()),
        });
    }
    let g: Vec<Vec<f64>> = signal.iter().map(outer_upper).collect();
    let width = g[0].len();

    // cumulative trapezoid integral, prefix[k] = ∫_{t_0}^{t_k}
    let mut prefix = vec![vec![0.0; width]; times.len()];
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        for c in 0..width {
            prefix[k][c] = prefix[k - 1][c] + 0.5 * h * (g[k - 1][c] + g[k][c]);
        }
    }
    let integral_to = |t: f64, hint: usize| -> (Vec<f64>, usize) {
        let mut k = hint;
        while k + 1 < times.len() && times[k + 1] <= t {
            k += 1;
        }
        let mut acc = prefix[k].clone();
        if k + 1 < times.len() && t > times[k] {
            let d = times[k + 1] - times[k];
            let h = t - times[k];
            for c in 0..width {
                acc[c] += g[k][c] * h + (g[k + 1][c] - g[k][c]) * h * h / (2.0 * d);
            }
        }
        (acc, k)
    };

    let first = times
        .iter()
        .position(|&t| t >= t0)
        .expect("t0 within record");
    let tol = 1e-9 * window;
    let mut starts = Vec::new();
    let mut mins = Vec::new();
    let mut hint = first;
    for s in first..times.len() {
        let end = times[s] + window;
        if end > t_last + tol {
            break;
        }
        let (upper, k) = integral_to(end.min(t_last), hint);
        hint = k;
        let diff: Vec<f64> = upper
            .iter()
            .zip(&prefix[s])
            .map(|(a, b)| (a - b) / window)
            .collect();
        let gram = unpack(n, &diff);
        let eig = SymmetricEigen::new(gram).eigenvalues;
        starts.push(times[s]);
        mins.push(eig.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let min = mins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PEReport {
        window,
        t0,
        min_gram_eigenvalue: min,
        window_starts: starts,
        min_eigenvalues: mins,
    })
}

/// PE measure of a function sampled on a grid; see [`gram_windows`].
pub fn pe_measure<F>(times: &[f64], mut f: F, window: f64, t0: f64) -> Result<PEReport>
where
    F: FnMut(usize, f64) -> Result<DMatrix<f64>>,
{
    let signal = times
        .iter()
        .enumerate()
        .map(|(k, &t)| f(k, t))
        .collect::<Result<Vec<_>>>()?;
    gram_windows(times, &signal, window, t0)
}

/// Mean spacing between upward zero crossings (linearly interpolated).
pub fn estimate_period(times: &[f64], values: &[f64]) -> Result<f64> {
    let mut crossings = Vec::new();
    for k in 1..times.len().min(values.len()) {
        let (a, b) = (values[k - 1], values[k]);
        if a < 0.0 && b >= 0.0 {
            let frac = -a / (b - a);
            crossings.push(times[k - 1] + frac * (times[k] - times[k - 1]));
        }
    }
    if crossings.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "need two upward zero crossings, found {}",
            crossings.len()
        )));
    }
    Ok((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Leader regressor `φᵀ(v(t))` at every logged sample.
pub fn leader_regressor_signal(log: &SimLog, model: &LeaderModel) -> Result<Vec<DMatrix<f64>>> {
    log.samples
        .iter()
        .map(|s| Ok(model.eval_phi(log.layout.v(&s.state))?.transpose()))
        .collect()
}

/// Excitation of `φᵀ(v)` along a logged leader trajectory over one estimated period.
pub fn leader_pe(log: &SimLog, model: &LeaderModel, t0: f64) -> Result<PEReport> {
    let times: Vec<f64> = log.times().collect();
    let v1: Vec<f64> = log.samples.iter().map(|s| s.state[0]).collect();
    let period = estimate_period(&times, &v1)?;
    let signal = leader_regressor_signal(log, model)?;
    gram_windows(&times, &signal, period, t0)
}

/// Observer Lyapunov diagnostic
/// `V = ½ [ṽᵀ (H ⊗ I_m) ṽ + μ⁻¹ Σ‖ω̃_i‖² + Σ (κ̂_i − κ̄_i)²]` at every logged sample.
///
/// `kappa_bar` is a caller-chosen proxy for the unknown sufficient gain, so the
/// result is a diagnostic rather than a certificate.
pub fn observer_lyapunov(
    log: &SimLog,
    h: &HMatrix,
    omega: &[f64],
    mu: f64,
    kappa_bar: &[f64],
) -> Result<Vec<f64>> {
    let lay = &log.layout;
    let n = lay.followers;
    let m = lay.state_dim;
    let dims = [
        ("H rows", n, h.matrix().nrows()),
        ("kappa_bar", n, kappa_bar.len()),
        ("omega", lay.param_dim, omega.len()),
    ];
    for (what, expected, got) in dims {
        if expected != got {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                got,
            });
        }
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidGain(format!(
            "mu must be positive (got {mu})"
        )));
    }
    let mut out = Vec::with_capacity(log.samples.len());
    let mut v_tilde = vec![0.0; n * m];
    for s in &log.samples {
        let x = &s.state;
        let v = lay.v(x);
        let mut omega_sq = 0.0;
        let mut kappa_sq = 0.0;
        for i in 0..n {
            for (k, (a, b)) in lay.v_hat(x, i).iter().zip(v).enumerate() {
                v_tilde[i * m + k] = a - b;
            }
            omega_sq += lay
                .omega_hat(x, i)
                .iter()
                .zip(omega)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            let dk = lay.kappa_hat(x, i) - kappa_bar[i];
            kappa_sq += dk * dk;
        }
        let hv = h.kron_apply(&v_tilde, m);
        let quad: f64 = v_tilde.iter().zip(&hv).map(|(a, b)| a * b).sum();
        out.push(0.5 * (quad + omega_sq / mu + kappa_sq));
    }
    Ok(out)
}

/// Per-arm `V_i = ½ (s_iᵀ M(q_i) s_i + θ̃_iᵀ Γ_i⁻¹ θ̃_i)`, indexed `[agent][sample]`.
pub fn agent_lyapunov(log: &SimLog, scenario: &Scenario) -> Result<Vec<Vec<f64>>> {
    let arms = scenario
        .arms
        .as_ref()
        .ok_or_else(|| Error::InvalidScenario("scenario has no arms".into()))?;
    if !log.layout.arms || arms.len() != log.layout.followers {
        return Err(Error::DimensionMismatch {
            what: "logged arms",
            expected: arms.len(),
            got: if log.layout.arms {
                log.layout.followers
            } else {
                0
            },
        });
    }
    let lay = &log.layout;
    Ok(arms
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            log.samples
                .iter()
                .map(|smp| {
                    let rec = smp.nodes[i].arm.as_ref().expect("arm layout");
                    let q = lay.q(&smp.state, i);
                    let kinetic = rec.s.dot(&(agent.params.mass_matrix(&q) * rec.s));
                    let th = lay.theta_hat(&smp.state, i) - agent.params.theta;
                    let adapt: f64 = th
                        .iter()
                        .zip(agent.gains.gamma().iter())
                        .map(|(e, g)| e * e / g)
                        .sum();
                    0.5 * (kinetic + adapt)
                })
                .collect()
        })
        .collect())
}

/// Trailing-window error maxima, per follower.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMetrics {
    pub window_start: f64,
    pub v_err: Vec<f64>,
    pub omega_err: Vec<f64>,
    /// Empty in observer-only runs, likewise `e_dot` and `s`.
    pub e: Vec<f64>,
    pub e_dot: Vec<f64>,
    pub s: Vec<f64>,
    pub kappa_total_variation: Vec<f64>,
    pub kappa_final: Vec<f64>,
    /// `κ̂_i` never decreased between logged samples over the whole run.
    pub kappa_nondecreasing: bool,
}

impl ConvergenceMetrics {
    pub fn max_v_err(&self) -> f64 {
        max(&self.v_err)
    }

    pub fn max_omega_err(&self) -> f64 {
        max(&self.omega_err)
    }

    pub fn max_e(&self) -> f64 {
        max(&self.e)
    }

    pub fn max_e_dot(&self) -> f64 {
        max(&self.e_dot)
    }

    pub fn max_s(&self) -> f64 {
        max(&self.s)
    }
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// Maxima over the samples with `t ≥ t_end (1 − window_fraction)`; `window_fraction` in `(0, 1]`.
pub fn convergence_metrics(log: &SimLog, window_fraction: f64) -> Result<ConvergenceMetrics> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidScenario(format!(
            "window_fraction must lie in (0, 1] (got {window_fraction})"
        )));
    }
    let lay = &log.layout;
    let n = lay.followers;
    let t_end = log.samples.last().map_or(0.0, |s| s.t);
    let window_start = t_end * (1.0 - window_fraction);
    let arms = lay.arms;
    let mut out = ConvergenceMetrics {
        window_start,
        v_err: vec![0.0; n],
        omega_err: vec![0.0; n],
        e: vec![0.0; if arms { n } else { 0 }],
        e_dot: vec![0.0; if arms { n } else { 0 }],
        s: vec![0.0; if arms { n } else { 0 }],
        kappa_total_variation: kappa_total_variation(log, window_start),
        kappa_final: log
            .samples
            .last()
            .map(|s| (0..n).map(|i| lay.kappa_hat(&s.state, i)).collect())
            .unwrap_or_default(),
        kappa_nondecreasing: log.samples.windows(2).all(|w| {
            (0..n).all(|i| lay.kappa_hat(&w[1].state, i) >= lay.kappa_hat(&w[0].state, i))
        }),
    };
    for smp in log.samples.iter().filter(|s| s.t >= window_start) {
        for (i, node) in smp.nodes.iter().enumerate() {
            out.v_err[i] = out.v_err[i].max(node.v_err_norm);
            out.omega_err[i] = out.omega_err[i].max(node.omega_err_norm);
            if let Some(a) = &node.arm {
                out.e[i] = out.e[i].max(a.e.norm());
                out.e_dot[i] = out.e_dot[i].max(a.e_dot.norm());
                out.s[i] = out.s[i].max(a.s.norm());
            }
        }
    }
    Ok(out)
}

/// Total variation of each `κ̂_i` over logged samples with `t ≥ t_from`.
pub fn kappa_total_variation(log: &SimLog, t_from: f64) -> Vec<f64> {
    let lay = &log.layout;
    let mut tv = vec![0.0; lay.followers];
    let tail: Vec<_> = log.samples.iter().filter(|s| s.t >= t_from).collect();
    for w in tail.windows(2) {
        for (i, acc) in tv.iter_mut().enumerate() {
            *acc += (lay.kappa_hat(&w[1].state, i) - lay.kappa_hat(&w[0].state, i)).abs();
        }
    }
    tv
}

/// `‖v̂_i − v‖` of every follower at every sample, `[sample][follower]`.
pub fn state_errors(log: &SimLog) -> Vec<Vec<f64>> {
    let lay = &log.layout;
    log.samples
        .iter()
        .map(|s| {
            let v = lay.v(&s.state);
            (0..lay.followers)
                .map(|i| {
                    let d: Vec<f64> = lay
                        .v_hat(&s.state, i)
                        .iter()
                        .zip(v)
                        .map(|(a, b)| a - b)
                        .collect();
                    norm(&d)
                })
                .collect()
        })
        .collect()
}
