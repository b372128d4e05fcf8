//! Coupled leader + observer bank + arm closed loop, integrated as one stacked ODE.
//!
//! State layout: the leader state `v` first, then one block per follower holding
//! `v̂_i, ω̂_i, κ̂_i` and, when arms are simulated, `q_i, q_i', θ̂_i`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DVector, Vector2, Vector5};

use crate::controller::{self, ControllerGains};
use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::integrate::Rk4;
use crate::lagrange::{self, ArmState, TwoLinkArmParams};
use crate::leader::LeaderModel;
use crate::observer::{self, NodeRates, RhoSpec};

/// Largest accepted integration step.
pub const MAX_DT: f64 = 0.01;

const ARM_BLOCK: usize = 2 + 2 + 5;

/// Index arithmetic for the stacked state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub state_dim: usize,
    pub param_dim: usize,
    pub followers: usize,
    pub arms: bool,
}

impl StateLayout {
    fn block(&self) -> usize {
        self.state_dim + self.param_dim + 1 + if self.arms { ARM_BLOCK } else { 0 }
    }

    fn base(&self, i: usize) -> usize {
        self.state_dim + i * self.block()
    }

    pub fn dim(&self) -> usize {
        self.state_dim + self.followers * self.block()
    }

    pub fn v<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.state_dim]
    }

    pub fn v_hat<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        let b = self.base(i);
        &x[b..b + self.state_dim]
    }

    pub fn omega_hat<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        let b = self.base(i) + self.state_dim;
        &x[b..b + self.param_dim]
    }

    pub fn kappa_hat(&self, x: &[f64], i: usize) -> f64 {
        x[self.base(i) + self.state_dim + self.param_dim]
    }

    fn arm_base(&self, i: usize) -> usize {
        debug_assert!(self.arms);
        self.base(i) + self.state_dim + self.param_dim + 1
    }

    pub fn q(&self, x: &[f64], i: usize) -> Vector2<f64> {
        let b = self.arm_base(i);
        Vector2::new(x[b], x[b + 1])
    }

    pub fn qd(&self, x: &[f64], i: usize) -> Vector2<f64> {
        let b = self.arm_base(i) + 2;
        Vector2::new(x[b], x[b + 1])
    }

    pub fn theta_hat(&self, x: &[f64], i: usize) -> Vector5<f64> {
        let b = self.arm_base(i) + 4;
        Vector5::from_column_slice(&x[b..b + 5])
    }

    /// Human-readable name of a state component, e.g. `vhat_3[1]` (followers one-based).
    pub fn describe(&self, idx: usize) -> String {
        if idx < self.state_dim {
            return format!("v[{idx}]");
        }
        let rel = idx - self.state_dim;
        let i = rel / self.block();
        let mut off = rel % self.block();
        let label = i + 1;
        if off < self.state_dim {
            return format!("vhat_{label}[{off}]");
        }
        off -= self.state_dim;
        if off < self.param_dim {
            return format!("omegahat_{label}[{off}]");
        }
        off -= self.param_dim;
        match off {
            0 => format!("kappa_{label}"),
            1 | 2 => format!("q_{label}[{}]", off - 1),
            3 | 4 => format!("qd_{label}[{}]", off - 3),
            _ => format!("thetahat_{label}[{}]", off - 5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverSetup {
    pub mu: f64,
    pub rho: Vec<RhoSpec>,
    pub kappa0: Vec<f64>,
    pub v_hat0: Vec<Vec<f64>>,
    pub omega_hat0: Vec<Vec<f64>>,
}

/// One follower arm: true plant parameters, initial condition and controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmAgent {
    pub params: TwoLinkArmParams,
    pub gains: ControllerGains,
    pub q0: Vector2<f64>,
    pub qd0: Vector2<f64>,
    pub theta_hat0: Vector5<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub t_end: f64,
    pub log_stride: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 50.0,
            log_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: CommGraph,
    pub leader: LeaderModel,
    pub v0: Vec<f64>,
    pub observer: ObserverSetup,
    /// `None` runs the observer bank alone.
    pub arms: Option<Vec<ArmAgent>>,
    pub settings: SimSettings,
}

/// True arm parameters of the six reference followers.
pub const REFERENCE_THETA: [[f64; 5]; 6] = [
    [0.64, 1.10, 0.08, 0.64, 0.32],
    [0.76, 1.17, 0.14, 0.93, 0.44],
    [0.91, 1.26, 0.22, 1.27, 0.58],
    [1.10, 1.36, 0.32, 1.67, 0.73],
    [1.21, 1.16, 0.12, 1.45, 1.03],
    [1.31, 1.56, 0.22, 1.65, 1.33],
];

pub const REFERENCE_Q0: [[f64; 2]; 6] = [
    [-1.0, 2.0],
    [-2.0, -1.0],
    [1.0, -1.0],
    [2.0, -1.0],
    [-3.0, 2.0],
    [-1.0, 1.0],
];

pub const REFERENCE_KAPPA0: [f64; 6] = [3.3689, 3.4607, 3.9816, 3.1564, 3.8555, 3.6448];

/// Initial state estimates of the reference run: `v(0)` perturbed by 0.1 per component.
///
/// The quartic coupling gain makes much larger initial disagreement stiff at `dt = 1e-3`.
pub const REFERENCE_V_HAT0: [[f64; 2]; 6] = [
    [1.9, 2.1],
    [2.1, 1.9],
    [1.9, 1.9],
    [2.1, 2.1],
    [2.0, 1.9],
    [1.9, 2.0],
];

impl Scenario {
    /// The six-arm Van der Pol reference scenario.
    pub fn reference() -> Self {
        let n = 6;
        let gains = ControllerGains::scalar(20.0, 10.0, 2.0).expect("reference gains are valid");
        let arms = (0..n)
            .map(|i| ArmAgent {
                params: TwoLinkArmParams::new(REFERENCE_THETA[i], lagrange::STANDARD_GRAVITY),
                gains,
                q0: Vector2::from(REFERENCE_Q0[i]),
                qd0: Vector2::zeros(),
                theta_hat0: Vector5::zeros(),
            })
            .collect();
        Self {
            graph: CommGraph::reference(),
            leader: LeaderModel::van_der_pol([1.0, 1.0, 1.0]),
            v0: vec![2.0, 2.0],
            observer: ObserverSetup {
                mu: 10.0,
                rho: vec![RhoSpec::reference(); n],
                kappa0: REFERENCE_KAPPA0.to_vec(),
                v_hat0: REFERENCE_V_HAT0.iter().map(|v| v.to_vec()).collect(),
                omega_hat0: vec![vec![0.0; 3]; n],
            },
            arms: Some(arms),
            settings: SimSettings::default(),
        }
    }

    /// Same scenario with the arms removed.
    pub fn observer_only(mut self) -> Self {
        self.arms = None;
        self
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout {
            state_dim: self.leader.state_dim(),
            param_dim: self.leader.param_dim(),
            followers: self.graph.num_followers(),
            arms: self.arms.is_some(),
        }
    }

    pub fn num_steps(&self) -> Result<usize> {
        let SimSettings { dt, t_end, .. } = self.settings;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "dt must be positive (got {dt})"
            )));
        }
        if dt > MAX_DT {
            return Err(Error::InvalidScenario(format!(
                "dt must be at most {MAX_DT} (got {dt})"
            )));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "t_end must be positive (got {t_end})"
            )));
        }
        let ratio = t_end / dt;
        let steps = libm::round(ratio);
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidScenario(format!(
                "t_end / dt must be an integer (got {ratio})"
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_followers();
        let m = self.leader.state_dim();
        let l = self.leader.param_dim();
        let dim = |what, expected, got| Error::DimensionMismatch {
            what,
            expected,
            got,
        };
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());

        if self.v0.len() != m {
            return Err(dim("leader initial state", m, self.v0.len()));
        }
        let obs = &self.observer;
        if !(obs.mu > 0.0 && obs.mu.is_finite()) {
            return Err(Error::InvalidGain(format!(
                "mu must be positive (got {})",
                obs.mu
            )));
        }
        if obs.rho.len() != n {
            return Err(dim("rho specs", n, obs.rho.len()));
        }
        if obs.kappa0.len() != n {
            return Err(dim("kappa0", n, obs.kappa0.len()));
        }
        if obs.v_hat0.len() != n {
            return Err(dim("v_hat0 rows", n, obs.v_hat0.len()));
        }
        if obs.omega_hat0.len() != n {
            return Err(dim("omega_hat0 rows", n, obs.omega_hat0.len()));
        }
        for (v, w) in obs.v_hat0.iter().zip(&obs.omega_hat0) {
            if v.len() != m {
                return Err(dim("v_hat0 entry", m, v.len()));
            }
            if w.len() != l {
                return Err(dim("omega_hat0 entry", l, w.len()));
            }
            if !finite(v) || !finite(w) {
                return Err(Error::InvalidScenario(
                    "non-finite observer initial state".into(),
                ));
            }
        }
        if !finite(&self.v0) || !finite(&obs.kappa0) {
            return Err(Error::InvalidScenario("non-finite initial state".into()));
        }

        if let Some(arms) = &self.arms {
            if arms.len() != n {
                return Err(dim("arm agents", n, arms.len()));
            }
            if self.leader.output_dim() != 2 {
                return Err(dim(
                    "leader output (two-link arm)",
                    2,
                    self.leader.output_dim(),
                ));
            }
            for a in arms {
                a.params.inertia_bounds(361)?;
                if !(a.params.gravity.is_finite()) {
                    return Err(Error::InvalidScenario("non-finite gravity".into()));
                }
            }
        }
        if self.settings.log_stride == 0 {
            return Err(Error::InvalidScenario("log_stride must be positive".into()));
        }
        self.num_steps()?;
        Ok(())
    }

    pub fn initial_state(&self) -> Vec<f64> {
        let layout = self.layout();
        let mut x = Vec::with_capacity(layout.dim());
        x.extend_from_slice(&self.v0);
        for i in 0..layout.followers {
            x.extend_from_slice(&self.observer.v_hat0[i]);
            x.extend_from_slice(&self.observer.omega_hat0[i]);
            x.push(self.observer.kappa0[i]);
            if let Some(arms) = &self.arms {
                let a = &arms[i];
                x.extend_from_slice(a.q0.as_slice());
                x.extend_from_slice(a.qd0.as_slice());
                x.extend_from_slice(a.theta_hat0.as_slice());
            }
        }
        x
    }
}

/// Controller and plant quantities of one arm at an instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmEval {
    pub q_hat_dot: Vector2<f64>,
    pub q_hat_ddot: Vector2<f64>,
    pub s: Vector2<f64>,
    pub tau: Vector2<f64>,
    pub theta_hat_dot: Vector5<f64>,
    pub qdd: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEval {
    pub observer: NodeRates,
    pub arm: Option<ArmEval>,
}

/// Full right-hand side at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub leader_rate: DVector<f64>,
    pub nodes: Vec<NodeEval>,
}

/// The coupled vector field of a validated scenario.
pub struct System<'a> {
    scenario: &'a Scenario,
    layout: StateLayout,
}

impl<'a> System<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            scenario,
            layout: scenario.layout(),
        })
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    fn neighborhood_error(&self, x: &[f64], i: usize) -> DVector<f64> {
        let lay = &self.layout;
        let graph = &self.scenario.graph;
        let own = lay.v_hat(x, i);
        let mut z = DVector::zeros(lay.state_dim);
        for &j in graph.in_neighbors(i) {
            let other = if j == graph.leader_index() {
                lay.v(x)
            } else {
                lay.v_hat(x, j)
            };
            for k in 0..lay.state_dim {
                z[k] += other[k] - own[k];
            }
        }
        z
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let sc = self.scenario;
        let lay = &self.layout;
        let model = &sc.leader;
        let leader_rate = model.vector_field(lay.v(x))?;
        let mut nodes = Vec::with_capacity(lay.followers);
        for i in 0..lay.followers {
            let z = self.neighborhood_error(x, i);
            let v_hat = lay.v_hat(x, i);
            let omega_hat = lay.omega_hat(x, i);
            let rates = observer::node_rates(
                model,
                &sc.observer.rho[i],
                sc.observer.mu,
                v_hat,
                omega_hat,
                lay.kappa_hat(x, i),
                z,
            );
            let arm = match &sc.arms {
                Some(arms) => Some(self.arm_eval(&arms[i], x, i, &rates)?),
                None => None,
            };
            nodes.push(NodeEval {
                observer: rates,
                arm,
            });
        }
        Ok(Evaluation { leader_rate, nodes })
    }

    fn arm_eval(
        &self,
        agent: &ArmAgent,
        x: &[f64],
        i: usize,
        rates: &NodeRates,
    ) -> Result<ArmEval> {
        let lay = &self.layout;
        let model = &self.scenario.leader;
        let alpha = agent.gains.alpha();
        let v_hat = lay.v_hat(x, i);
        let omega_hat = lay.omega_hat(x, i);
        let state = ArmState {
            q: lay.q(x, i),
            qd: lay.qd(x, i),
        };
        let q_hat_dot = controller::ref_velocity(model, v_hat, omega_hat, &state.q, alpha)?;
        let q_hat_ddot = controller::ref_acceleration(
            model,
            v_hat,
            omega_hat,
            rates.omega_hat_dot.as_slice(),
            rates.v_hat_dot.as_slice(),
            &state.qd,
            alpha,
        )?;
        let s = controller::sliding_error(&state.qd, &q_hat_dot);
        // the controller only knows g, not θ
        let y = lagrange::regressor(
            agent.params.gravity,
            &state.q,
            &state.qd,
            &q_hat_ddot,
            &q_hat_dot,
        );
        let theta_hat = lay.theta_hat(x, i);
        let tau = controller::control_torque(&agent.gains, &y, &s, &theta_hat);
        let theta_hat_dot = controller::theta_hat_derivative(&agent.gains, &y, &s);
        let qdd = agent.params.forward_dynamics(&state, &tau)?;
        Ok(ArmEval {
            q_hat_dot,
            q_hat_ddot,
            s,
            tau,
            theta_hat_dot,
            qdd,
        })
    }

    /// Write the stacked derivative of `x` into `dx`.
    pub fn derivative(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let ev = self.evaluate(x)?;
        let lay = &self.layout;
        let (m, l) = (lay.state_dim, lay.param_dim);
        dx[..m].copy_from_slice(ev.leader_rate.as_slice());
        for (i, node) in ev.nodes.iter().enumerate() {
            let b = lay.base(i);
            dx[b..b + m].copy_from_slice(node.observer.v_hat_dot.as_slice());
            dx[b + m..b + m + l].copy_from_slice(node.observer.omega_hat_dot.as_slice());
            dx[b + m + l] = node.observer.kappa_hat_dot;
            if let Some(arm) = &node.arm {
                let a = b + m + l + 1;
                dx[a..a + 2].copy_from_slice(x[a + 2..a + 4].to_vec().as_slice());
                dx[a + 2..a + 4].copy_from_slice(arm.qdd.as_slice());
                dx[a + 4..a + 9].copy_from_slice(arm.theta_hat_dot.as_slice());
            }
        }
        Ok(())
    }
}

/// Derived quantities of one arm at a log point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmRecord {
    pub tau: Vector2<f64>,
    pub s: Vector2<f64>,
    /// `q_i − E v`
    pub e: Vector2<f64>,
    /// `q_i' − E v'`
    pub e_dot: Vector2<f64>,
    pub q_hat_dot: Vector2<f64>,
    pub theta_err_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub z: Vec<f64>,
    pub rho: f64,
    pub v_hat_dot: Vec<f64>,
    pub omega_hat_dot: Vec<f64>,
    pub v_err_norm: f64,
    pub omega_err_norm: f64,
    pub arm: Option<ArmRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: Vec<f64>,
    pub leader_rate: Vec<f64>,
    pub nodes: Vec<NodeRecord>,
}

/// Time series of the stacked state plus derived metrics at every logged step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub layout: StateLayout,
    pub dt: f64,
    pub log_stride: usize,
    pub samples: Vec<Sample>,
}

impl SimLog {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn final_state(&self) -> &[f64] {
        &self
            .samples
            .last()
            .expect("log holds at least the initial sample")
            .state
    }
}

fn record(scenario: &Scenario, layout: &StateLayout, t: f64, x: &[f64], ev: Evaluation) -> Sample {
    let model = &scenario.leader;
    let v = layout.v(x);
    let omega = model.true_params();
    let e_v = model.output(v).expect("validated dims");
    let e_vdot = model.output_matrix() * &ev.leader_rate;
    let nodes = ev
        .nodes
        .into_iter()
        .enumerate()
        .map(|(i, node)| {
            let v_hat = layout.v_hat(x, i);
            let v_err =
                observer::norm(&v_hat.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>());
            let w_err = observer::norm(
                &layout
                    .omega_hat(x, i)
                    .iter()
                    .zip(omega.iter())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            let arm = node.arm.map(|a| {
                let agent = &scenario.arms.as_ref().expect("arm record implies arms")[i];
                ArmRecord {
                    tau: a.tau,
                    s: a.s,
                    e: layout.q(x, i) - Vector2::new(e_v[0], e_v[1]),
                    e_dot: layout.qd(x, i) - Vector2::new(e_vdot[0], e_vdot[1]),
                    q_hat_dot: a.q_hat_dot,
                    theta_err_norm: (layout.theta_hat(x, i) - agent.params.theta).norm(),
                }
            });
            NodeRecord {
                z: node.observer.z.as_slice().to_vec(),
                rho: node.observer.rho,
                v_hat_dot: node.observer.v_hat_dot.as_slice().to_vec(),
                omega_hat_dot: node.observer.omega_hat_dot.as_slice().to_vec(),
                v_err_norm: v_err,
                omega_err_norm: w_err,
                arm,
            }
        })
        .collect();
    Sample {
        t,
        state: x.to_vec(),
        leader_rate: ev.leader_rate.as_slice().to_vec(),
        nodes,
    }
}

fn first_non_finite(layout: &StateLayout, t: f64, x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(component) => Err(Error::NonFiniteState {
            t,
            component,
            name: layout.describe(component),
        }),
        None => Ok(()),
    }
}

/// Integrate the scenario from `t = 0` to `t_end` with fixed-step RK4.
pub fn run(scenario: &Scenario) -> Result<SimLog> {
    let system = System::new(scenario)?;
    let layout = system.layout();
    let steps = scenario.num_steps()?;
    let SimSettings { dt, log_stride, .. } = scenario.settings;

    let mut x = scenario.initial_state();
    let mut rk = Rk4::new(x.len());
    let mut samples = Vec::with_capacity(steps / log_stride + 2);
    samples.push(record(scenario, &layout, 0.0, &x, system.evaluate(&x)?));

    for k in 0..steps {
        let t = k as f64 * dt;
        let t_next = (k + 1) as f64 * dt;
        rk.step(|_, s, ds| system.derivative(s, ds), t, dt, &mut x)
            .map_err(|e| match e {
                Error::NonFiniteDerivative { t, component } => Error::NonFiniteState {
                    t,
                    component,
                    name: layout.describe(component),
                },
                other => other,
            })?;
        first_non_finite(&layout, t_next, &x)?;
        if (k + 1) % log_stride == 0 || k + 1 == steps {
            samples.push(record(scenario, &layout, t_next, &x, system.evaluate(&x)?));
        }
    }

    Ok(SimLog {
        layout,
        dt,
        log_stride,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_dimension_is_92() {
        let sc = Scenario::reference();
        assert_eq!(sc.layout().dim(), 92);
        assert_eq!(sc.initial_state().len(), 92);
        assert_eq!(sc.clone().observer_only().layout().dim(), 2 + 6 * 6);
    }

    #[test]
    fn describe_components() {
        let lay = Scenario::reference().layout();
        assert_eq!(lay.describe(0), "v[0]");
        assert_eq!(lay.describe(2), "vhat_1[0]");
        assert_eq!(lay.describe(4), "omegahat_1[0]");
        assert_eq!(lay.describe(7), "kappa_1");
        assert_eq!(lay.describe(8), "q_1[0]");
        assert_eq!(lay.describe(11), "qd_1[1]");
        assert_eq!(lay.describe(16), "thetahat_1[4]");
        assert_eq!(lay.describe(17), "vhat_2[0]");
    }

    #[test]
    fn settings_validation() {
        let mut sc = Scenario::reference();
        sc.settings.dt = 0.02;
        assert!(matches!(sc.validate(), Err(Error::InvalidScenario(_))));
        sc.settings.dt = 3e-3;
        sc.settings.t_end = 1.0;
        assert!(matches!(sc.validate(), Err(Error::InvalidScenario(_))));
        sc.settings.dt = 2e-3;
        assert!(sc.validate().is_ok());
        sc.settings.log_stride = 0;
        assert!(sc.validate().is_err());
    }

    #[test]
    fn dimension_errors_are_reported() {
        let mut sc = Scenario::reference();
        sc.observer.kappa0.pop();
        assert!(matches!(
            sc.validate(),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut sc = Scenario::reference();
        sc.observer.mu = -1.0;
        assert!(matches!(sc.validate(), Err(Error::InvalidGain(_))));
    }

    #[test]
    fn short_run_logs_and_stays_finite() {
        let mut sc = Scenario::reference();
        sc.settings.t_end = 0.1;
        sc.settings.log_stride = 7;
        let log = run(&sc).unwrap();
        let times: Vec<f64> = log.times().collect();
        // 100 steps, stride 7: 0, 7, ..., 98, then the final step 100
        assert_eq!(times.len(), 1 + 14 + 1);
        assert!((times[times.len() - 1] - 0.1).abs() < 1e-15);
        assert!(log
            .samples
            .iter()
            .all(|s| s.state.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn blow_up_reports_component() {
        let mut sc = Scenario::reference().observer_only();
        // absurd initial disagreement drives the coupling unstable at this step size
        sc.observer.v_hat0[2] = vec![50.0, -50.0];
        sc.settings.t_end = 1.0;
        let err = run(&sc).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }), "{err:?}");
    }
}
