//! JSON scenario files.
//!
//! A file has six sections: `graph`, `leader`, `observer`, `agents`,
//! `controller`, `sim`. Unknown keys are rejected everywhere.

use nalgebra::{DMatrix, Matrix2, Vector2, Vector5};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use synclab_core::controller::ControllerGains;
use synclab_core::lagrange::{TwoLinkArmParams, STANDARD_GRAVITY};
use synclab_core::leader::{Monomial, PolynomialRegressor};
use synclab_core::observer::RhoSpec;
use synclab_core::sim::{ArmAgent, ObserverSetup, SimSettings};
use synclab_core::{CommGraph, LeaderModel, Scenario};

use crate::error::CliError;

/// The built-in six-arm reference scenario.
pub const REFERENCE_JSON: &str = include_str!("../scenarios/reference.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub graph: GraphSection,
    pub leader: LeaderSection,
    pub observer: ObserverSection,
    #[serde(default)]
    pub agents: Vec<AgentSection>,
    pub controller: Option<ControllerSection>,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub followers: usize,
    /// One-based `[from, to]` pairs; the leader is `followers + 1`.
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LeaderSection {
    VanDerPol {
        omega: [f64; 3],
        v0: Vec<f64>,
        #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
        e: Option<Vec<Vec<f64>>>,
    },
    Polynomial {
        state_dim: usize,
        param_dim: usize,
        terms: Vec<TermSection>,
        omega: Vec<f64>,
        v0: Vec<f64>,
        #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
        e: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub row: usize,
    pub col: usize,
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSection {
    Coefficients(RhoCoefficients),
    Recipe(RhoRecipe),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoCoefficients {
    pub coefficients: Vec<f64>,
    pub offset: f64,
}

/// `ρ(z) = a Σ_{k=0}^{2 m0 − 2} ‖z‖^k + b` with `m0` the leader's polynomial degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoRecipe {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    pub mu: f64,
    pub rho: RhoSection,
    pub kappa0: Vec<f64>,
    /// Defaults to the leader's initial state for every follower.
    pub v_hat0: Option<Vec<Vec<f64>>>,
    /// Defaults to zero.
    pub omega_hat0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub theta: [f64; 5],
    pub q0: [f64; 2],
    #[serde(default)]
    pub qd0: [f64; 2],
    #[serde(default = "default_gravity")]
    pub g: f64,
    #[serde(default)]
    pub theta_hat0: [f64; 5],
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixOrScalar {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiagonalOrScalar {
    Scalar(f64),
    Diagonal([f64; 5]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(rename = "K")]
    pub k: MatrixOrScalar,
    #[serde(rename = "Gamma")]
    pub gamma: DiagonalOrScalar,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub t_end: f64,
    pub log_stride: usize,
    pub observer_only: bool,
    /// Only used by randomized test harnesses.
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimSettings::default();
        Self {
            dt: s.dt,
            t_end: s.t_end,
            log_stride: s.log_stride,
            observer_only: false,
            seed: 0,
        }
    }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn output_matrix(rows: &[Vec<f64>], state_dim: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.is_empty() || rows.iter().any(|r| r.len() != state_dim) {
        return Err(schema(format!(
            "leader.E must have rows of length {state_dim}"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), state_dim, &flat))
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| schema(e.to_string()))
    }

    pub fn from_value(value: Value) -> Result<Self, CliError> {
        serde_json::from_value(value).map_err(|e| schema(e.to_string()))
    }

    pub fn reference() -> Self {
        Self::from_json(REFERENCE_JSON).expect("embedded reference scenario parses")
    }

    fn leader_model(&self) -> Result<(LeaderModel, Vec<f64>), CliError> {
        let (model, v0, e) = match &self.leader {
            LeaderSection::VanDerPol { omega, v0, e } => {
                (LeaderModel::van_der_pol(*omega), v0.clone(), e)
            }
            LeaderSection::Polynomial {
                state_dim,
                param_dim,
                terms,
                omega,
                v0,
                e,
            } => {
                let terms = terms
                    .iter()
                    .map(|t| Monomial {
                        row: t.row,
                        col: t.col,
                        coef: t.coef,
                        powers: t.powers.clone(),
                    })
                    .collect();
                let reg = PolynomialRegressor::new(*state_dim, *param_dim, terms)?;
                (LeaderModel::polynomial(reg, omega)?, v0.clone(), e)
            }
        };
        let model = match e {
            Some(rows) => {
                let e = output_matrix(rows, model.state_dim())?;
                model.with_output(e)?
            }
            None => model,
        };
        Ok((model, v0))
    }

    fn rho(&self, model: &LeaderModel) -> Result<RhoSpec, CliError> {
        Ok(match &self.observer.rho {
            RhoSection::Coefficients(c) => RhoSpec::new(c.coefficients.clone(), c.offset)?,
            RhoSection::Recipe(r) => RhoSpec::for_polynomial_leader(model.poly_degree(), r.a, r.b)?,
        })
    }

    fn gains(&self) -> Result<ControllerGains, CliError> {
        let c = self
            .controller
            .as_ref()
            .ok_or_else(|| schema("controller section is required when agents are simulated"))?;
        let k = match c.k {
            MatrixOrScalar::Scalar(k) => Matrix2::identity() * k,
            MatrixOrScalar::Matrix(m) => Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
        };
        let gamma = match c.gamma {
            DiagonalOrScalar::Scalar(g) => Vector5::repeat(g),
            DiagonalOrScalar::Diagonal(d) => Vector5::from(d),
        };
        Ok(ControllerGains::new(k, gamma, c.alpha)?)
    }

    /// Schema-level checks plus full core validation.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let obs = &self.observer;
        if obs.mu.is_nan() || obs.mu <= 0.0 {
            return Err(schema("mu must be positive"));
        }
        let n = self.graph.followers;
        let edges: Vec<(usize, usize)> = self.graph.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = CommGraph::new(n, &edges)?;
        graph.h_matrix()?;
        let (leader, v0) = self.leader_model()?;
        let rho = self.rho(&leader)?;

        let v_hat0 = obs.v_hat0.clone().unwrap_or_else(|| vec![v0.clone(); n]);
        let omega_hat0 = obs
            .omega_hat0
            .clone()
            .unwrap_or_else(|| vec![vec![0.0; leader.param_dim()]; n]);

        let arms = if self.sim.observer_only {
            None
        } else if self.agents.is_empty() {
            return Err(schema(
                "agents section is empty; set sim.observer_only for an observer-only run",
            ));
        } else {
            let gains = self.gains()?;
            Some(
                self.agents
                    .iter()
                    .map(|a| ArmAgent {
                        params: TwoLinkArmParams::new(a.theta, a.g),
                        gains,
                        q0: Vector2::from(a.q0),
                        qd0: Vector2::from(a.qd0),
                        theta_hat0: Vector5::from(a.theta_hat0),
                    })
                    .collect(),
            )
        };

        let scenario = Scenario {
            graph,
            leader,
            v0,
            observer: ObserverSetup {
                mu: obs.mu,
                rho: vec![rho; n],
                kappa0: obs.kappa0.clone(),
                v_hat0,
                omega_hat0,
            },
            arms,
            settings: SimSettings {
                dt: self.sim.dt,
                t_end: self.sim.t_end,
                log_stride: self.sim.log_stride,
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Set `path` (dot-separated keys, numeric segments index arrays) to `value` in place.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(schema(format!("malformed parameter path '{path}'")));
    }
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert((*seg).to_string(), value);
                    return Ok(());
                }
                map.entry(*seg)
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| schema(format!("'{seg}' in '{path}' must index an array")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| {
                    schema(format!("index {idx} in '{path}' out of range (len {len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(schema(format!("'{path}' does not address a config field"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Parse an override value: JSON if it parses, otherwise a bare string.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Apply `key=value` overrides to a raw scenario document.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| schema(format!("override '{o}' must have the form key=value")))?;
        set_path(doc, key.trim(), parse_value(raw.trim()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reference_file_matches_built_in_scenario() {
        assert_eq!(
            ScenarioFile::reference().to_scenario().unwrap(),
            Scenario::reference()
        );
    }

    #[test]
    fn reference_round_trips_through_serde() {
        let file = ScenarioFile::reference();
        let text = serde_json::to_string(&file).unwrap();
        assert_eq!(ScenarioFile::from_json(&text).unwrap(), file);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        doc["observer"]["nu"] = json!(3.0);
        assert!(matches!(
            ScenarioFile::from_value(doc),
            Err(CliError::Schema(_))
        ));

        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        doc["leader"]["beta"] = json!(1.0);
        assert!(ScenarioFile::from_value(doc).is_err());

        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        doc["extra"] = json!({});
        assert!(ScenarioFile::from_value(doc).is_err());
    }

    #[test]
    fn negative_mu_is_a_schema_error() {
        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        doc["observer"]["mu"] = json!(-1.0);
        let err = ScenarioFile::from_value(doc)
            .unwrap()
            .to_scenario()
            .unwrap_err();
        match err {
            CliError::Schema(msg) => assert_eq!(msg, "mu must be positive"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_leader_edge_names_spanning_tree() {
        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        let edges: Vec<Value> = doc["graph"]["edges"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e[0] != json!(7))
            .cloned()
            .collect();
        doc["graph"]["edges"] = Value::Array(edges);
        let err = ScenarioFile::from_value(doc)
            .unwrap()
            .to_scenario()
            .unwrap_err();
        assert!(err.to_string().contains("spanning tree"), "{err}");
    }

    #[test]
    fn rho_recipe_and_scalar_or_matrix_gains() {
        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        doc["observer"]["rho"] = json!({"a": 1.0, "b": 1.0});
        doc["controller"]["K"] = json!([[20.0, 0.0], [0.0, 30.0]]);
        doc["controller"]["Gamma"] = json!([1.0, 2.0, 3.0, 4.0, 5.0]);
        let sc = ScenarioFile::from_value(doc)
            .unwrap()
            .to_scenario()
            .unwrap();
        // degree 3 leader: a Σ_{k=0}^{4} ‖z‖^k + b
        assert_eq!(sc.observer.rho[0].coefficients(), &[1.0; 5]);
        assert_eq!(sc.observer.rho[0].offset(), 1.0);
        let arm = &sc.arms.unwrap()[0];
        assert_eq!(arm.gains.k()[(1, 1)], 30.0);
        assert_eq!(arm.gains.gamma()[4], 5.0);
    }

    #[test]
    fn observer_only_needs_no_agents() {
        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        doc.as_object_mut().unwrap().remove("agents");
        doc.as_object_mut().unwrap().remove("controller");
        let file = ScenarioFile::from_value(doc.clone()).unwrap();
        assert!(matches!(file.to_scenario(), Err(CliError::Schema(_))));
        doc["sim"]["observer_only"] = json!(true);
        let sc = ScenarioFile::from_value(doc)
            .unwrap()
            .to_scenario()
            .unwrap();
        assert!(sc.arms.is_none());
    }

    #[test]
    fn dotted_overrides() {
        let mut doc: Value = serde_json::from_str(REFERENCE_JSON).unwrap();
        apply_overrides(
            &mut doc,
            &[
                "sim.dt=2e-3".into(),
                "observer.kappa0.2=5".into(),
                "leader.type=van_der_pol".into(),
            ],
        )
        .unwrap();
        assert_eq!(doc["sim"]["dt"], json!(2e-3));
        assert_eq!(doc["observer"]["kappa0"][2], json!(5));
        assert!(apply_overrides(&mut doc, &["observer.kappa0.9=1".into()]).is_err());
        assert!(apply_overrides(&mut doc, &["sim.dt".into()]).is_err());
        assert!(apply_overrides(&mut doc, &["sim..dt=1".into()]).is_err());
        assert!(apply_overrides(&mut doc, &["observer.mu.x=1".into()]).is_err());
    }
}
