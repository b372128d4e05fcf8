//! Run artifacts: `run.csv`, `errors.csv`, `metrics.json`, `pe_report.csv`, `plot.gp`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use synclab_core::analysis::{self, ConvergenceMetrics, PEReport};
use synclab_core::{Scenario, SimLog};

use crate::error::CliError;

/// Trailing window used for every reported maximum.
pub const WINDOW_FRACTION: f64 = 0.1;

/// PE windows start here unless the run is too short.
pub const PE_START: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct FollowerMetrics {
    pub label: usize,
    pub v_err: f64,
    pub omega_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_dot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub kappa_final: f64,
    pub kappa_total_variation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_err_final: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeSummary {
    pub period: f64,
    pub t0: f64,
    pub min_gram_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovSummary {
    pub note: &'static str,
    pub initial: f64,
    #[serde(rename = "final")]
    pub last: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub dt: f64,
    pub t_end: f64,
    pub observer_only: bool,
    pub window_fraction: f64,
    pub window_start: f64,
    pub max_v_err: f64,
    pub max_omega_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_e_dot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_s: Option<f64>,
    pub kappa_nondecreasing: bool,
    pub followers: Vec<FollowerMetrics>,
    pub pe: Option<PeSummary>,
    pub observer_lyapunov: LyapunovSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent_lyapunov_max_increment: Option<f64>,
    pub gates: Vec<Gate>,
}

impl RunSummary {
    pub fn gates_pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

fn gate(name: &'static str, value: f64, limit: f64) -> Gate {
    Gate {
        name,
        value,
        limit,
        pass: value <= limit,
    }
}

fn pe_report(log: &SimLog, scenario: &Scenario) -> Option<(f64, PEReport)> {
    let times: Vec<f64> = log.times().collect();
    let v1: Vec<f64> = log.samples.iter().map(|s| s.state[0]).collect();
    let period = analysis::estimate_period(&times, &v1).ok()?;
    let t_last = *times.last()?;
    let t0 = if t_last - PE_START >= 2.0 * period {
        PE_START
    } else {
        times[0]
    };
    let report = analysis::leader_pe(log, &scenario.leader, t0).ok()?;
    Some((period, report))
}

fn kappa_bar_proxy(log: &SimLog) -> Vec<f64> {
    let lay = &log.layout;
    (0..lay.followers)
        .map(|i| lay.kappa_hat(log.final_state(), i))
        .collect()
}

/// Compute every reported metric and acceptance gate of a finished run.
pub fn summarize(
    log: &SimLog,
    scenario: &Scenario,
) -> Result<(RunSummary, Option<PEReport>), CliError> {
    let m: ConvergenceMetrics = analysis::convergence_metrics(log, WINDOW_FRACTION)?;
    let arms = log.layout.arms;
    let last = log.samples.last().expect("non-empty log");
    let followers = (0..log.layout.followers)
        .map(|i| FollowerMetrics {
            label: i + 1,
            v_err: m.v_err[i],
            omega_err: m.omega_err[i],
            e: arms.then(|| m.e[i]),
            e_dot: arms.then(|| m.e_dot[i]),
            s: arms.then(|| m.s[i]),
            kappa_final: m.kappa_final[i],
            kappa_total_variation: m.kappa_total_variation[i],
            theta_err_final: last.nodes[i].arm.map(|a| a.theta_err_norm),
        })
        .collect();

    let h = scenario.graph.h_matrix()?;
    let v = analysis::observer_lyapunov(
        log,
        &h,
        scenario.leader.true_params().as_slice(),
        scenario.observer.mu,
        &kappa_bar_proxy(log),
    )?;
    let agent_inc = if arms {
        let series = analysis::agent_lyapunov(log, scenario)?;
        Some(
            series
                .iter()
                .flat_map(|s| s.windows(2).map(|w| w[1] - w[0]))
                .fold(f64::NEG_INFINITY, f64::max),
        )
    } else {
        None
    };

    let pe = pe_report(log, scenario);
    let mut gates = vec![gate("max_v_err", m.max_v_err(), 1e-2)];
    if arms {
        gates.push(gate("max_e", m.max_e(), 1e-2));
        gates.push(gate("max_e_dot", m.max_e_dot(), 5e-2));
    }
    gates.push(Gate {
        name: "kappa_nondecreasing",
        value: if m.kappa_nondecreasing { 0.0 } else { 1.0 },
        limit: 0.0,
        pass: m.kappa_nondecreasing,
    });

    let summary = RunSummary {
        dt: scenario.settings.dt,
        t_end: scenario.settings.t_end,
        observer_only: !arms,
        window_fraction: WINDOW_FRACTION,
        window_start: m.window_start,
        max_v_err: m.max_v_err(),
        max_omega_err: m.max_omega_err(),
        max_e: arms.then(|| m.max_e()),
        max_e_dot: arms.then(|| m.max_e_dot()),
        max_s: arms.then(|| m.max_s()),
        kappa_nondecreasing: m.kappa_nondecreasing,
        followers,
        pe: pe.as_ref().map(|(period, r)| PeSummary {
            period: *period,
            t0: r.t0,
            min_gram_eigenvalue: r.min_gram_eigenvalue,
        }),
        observer_lyapunov: LyapunovSummary {
            note: "diagnostic only: kappa_bar proxied by kappa_hat(t_end)",
            initial: v[0],
            last: v[v.len() - 1],
        },
        agent_lyapunov_max_increment: agent_inc,
        gates,
    };
    Ok((summary, pe.map(|(_, r)| r)))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header of `run.csv`.
pub fn csv_header(log: &SimLog) -> Vec<String> {
    let lay = &log.layout;
    let (m, l) = (lay.state_dim, lay.param_dim);
    let mut h = vec!["t".to_string()];
    h.extend((0..m).map(|k| format!("v_{k}")));
    for i in 1..=lay.followers {
        h.extend((0..m).map(|k| format!("vhat_{i}_{k}")));
        h.extend((0..l).map(|k| format!("omegahat_{i}_{k}")));
        h.push(format!("kappa_{i}"));
        if lay.arms {
            for (name, len) in [
                ("q", 2),
                ("qd", 2),
                ("thetahat", 5),
                ("tau", 2),
                ("e", 2),
                ("s", 2),
            ] {
                h.extend((0..len).map(|k| format!("{name}_{i}_{k}")));
            }
        }
    }
    h
}

/// One `run.csv` row per logged sample.
pub fn csv_rows(log: &SimLog) -> impl Iterator<Item = Vec<f64>> + '_ {
    let lay = log.layout;
    log.samples.iter().map(move |s| {
        let x = &s.state;
        let mut row = vec![s.t];
        row.extend_from_slice(lay.v(x));
        for (i, node) in s.nodes.iter().enumerate() {
            row.extend_from_slice(lay.v_hat(x, i));
            row.extend_from_slice(lay.omega_hat(x, i));
            row.push(lay.kappa_hat(x, i));
            if let Some(a) = &node.arm {
                row.extend(lay.q(x, i).iter());
                row.extend(lay.qd(x, i).iter());
                row.extend(lay.theta_hat(x, i).iter());
                row.extend(a.tau.iter());
                row.extend(a.e.iter());
                row.extend(a.s.iter());
            }
        }
        row
    })
}

pub fn write_run_csv(log: &SimLog, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "{}", csv_header(log).join(",")).map_err(io)?;
    for row in csv_rows(log) {
        let line: Vec<String> = row.into_iter().map(num).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Error norms per follower: `‖ṽ_i‖`, `‖ω̃_i‖` and, with arms, `‖e_i‖`, `‖ė_i‖`.
pub fn write_errors_csv(log: &SimLog, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    let lay = &log.layout;
    let mut header = vec!["t".to_string()];
    for i in 1..=lay.followers {
        header.push(format!("verr_{i}"));
        header.push(format!("omegaerr_{i}"));
        if lay.arms {
            header.push(format!("enorm_{i}"));
            header.push(format!("edotnorm_{i}"));
        }
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for s in &log.samples {
        let mut line = vec![num(s.t)];
        for node in &s.nodes {
            line.push(num(node.v_err_norm));
            line.push(num(node.omega_err_norm));
            if let Some(a) = &node.arm {
                line.push(num(a.e.norm()));
                line.push(num(a.e_dot.norm()));
            }
        }
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_pe_csv(report: Option<&PEReport>, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "window_start,min_eigenvalue").map_err(io)?;
    if let Some(r) = report {
        for (t, e) in r.window_starts.iter().zip(&r.min_eigenvalues) {
            writeln!(w, "{},{}", num(*t), num(*e)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Gnuplot script: joint trajectories, errors, adaptive gains, parameter errors.
pub fn plot_script(log: &SimLog) -> String {
    let lay = &log.layout;
    let n = lay.followers;
    let series = |file: &str, col: &dyn Fn(usize) -> String, title: &dyn Fn(usize) -> String| {
        (1..=n)
            .map(|i| {
                format!(
                    "'{file}' using \"t\":\"{}\" with lines title '{}'",
                    col(i),
                    title(i)
                )
            })
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    let mut s = String::from(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't (s)'\nset grid\n",
    );
    s.push_str("set terminal pngcairo size 1200,800\n");
    if lay.arms {
        for k in 0..2 {
            s.push_str(&format!(
                "\nset output 'joints_{k}.png'\nset ylabel 'q_{{i,{}}}'\nplot 'run.csv' using \"t\":\"v_{k}\" with lines lw 2 title 'leader', \\\n     {}\n",
                k + 1,
                series("run.csv", &|i| format!("q_{i}_{k}"), &|i| format!("arm {i}"))
            ));
        }
        s.push_str(&format!(
            "\nset output 'errors.png'\nset multiplot layout 2,1\nset ylabel '|e_i|'\nplot {}\nset ylabel '|de_i/dt|'\nplot {}\nunset multiplot\n",
            series("errors.csv", &|i| format!("enorm_{i}"), &|i| format!("arm {i}")),
            series("errors.csv", &|i| format!("edotnorm_{i}"), &|i| format!("arm {i}"))
        ));
    } else {
        s.push_str(&format!(
            "\nset output 'state_errors.png'\nset ylabel '|vhat_i - v|'\nset logscale y\nplot {}\nunset logscale y\n",
            series("errors.csv", &|i| format!("verr_{i}"), &|i| format!("follower {i}"))
        ));
    }
    s.push_str(&format!(
        "\nset output 'kappa.png'\nset ylabel 'kappa_i'\nplot {}\n",
        series("run.csv", &|i| format!("kappa_{i}"), &|i| format!(
            "follower {i}"
        ))
    ));
    s.push_str(&format!(
        "\nset output 'omega_errors.png'\nset ylabel '|omegahat_i - omega|'\nplot {}\n",
        series("errors.csv", &|i| format!("omegaerr_{i}"), &|i| format!(
            "follower {i}"
        ))
    ));
    s
}

/// Write the full artifact set into `dir`, creating it if needed.
pub fn write_artifacts(
    dir: &Path,
    log: &SimLog,
    summary: &RunSummary,
    pe: Option<&PEReport>,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_run_csv(log, &dir.join("run.csv"))?;
    write_errors_csv(log, &dir.join("errors.csv"))?;
    write_pe_csv(pe, &dir.join("pe_report.csv"))?;
    let metrics = dir.join("metrics.json");
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(&metrics, text + "\n").map_err(|e| CliError::io(&metrics, e))?;
    let plot = dir.join("plot.gp");
    fs::write(&plot, plot_script(log)).map_err(|e| CliError::io(&plot, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use synclab_core::sim::run;

    fn short(arms: bool) -> (Scenario, SimLog) {
        let mut sc = Scenario::reference();
        if !arms {
            sc = sc.observer_only();
        }
        sc.settings.t_end = 0.05;
        let log = run(&sc).unwrap();
        (sc, log)
    }

    #[test]
    fn header_column_order() {
        let (_, log) = short(true);
        let h = csv_header(&log);
        assert_eq!(&h[..3], &["t", "v_0", "v_1"]);
        assert_eq!(
            &h[3..9],
            &[
                "vhat_1_0",
                "vhat_1_1",
                "omegahat_1_0",
                "omegahat_1_1",
                "omegahat_1_2",
                "kappa_1"
            ]
        );
        assert_eq!(h[9], "q_1_0");
        assert_eq!(h[13], "thetahat_1_0");
        assert_eq!(h[18], "tau_1_0");
        assert_eq!(h[20], "e_1_0");
        assert_eq!(h[22], "s_1_0");
        assert_eq!(h[24], "vhat_2_0");
        // per follower: 2 + 3 + 1 + 2 + 2 + 5 + 2 + 2 + 2
        assert_eq!(h.len(), 3 + 6 * 21);
        assert!(csv_rows(&log).all(|r| r.len() == h.len()));
    }

    #[test]
    fn observer_only_header_has_no_arm_columns() {
        let (_, log) = short(false);
        let h = csv_header(&log);
        assert_eq!(h.len(), 3 + 6 * 6);
        assert!(!h.iter().any(|c| c.starts_with("q_")));
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let x = 0.1f64 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(x), "3.0000000000000004e-1");
    }

    #[test]
    fn plot_script_references_existing_columns() {
        let (_, log) = short(true);
        let s = plot_script(&log);
        let header = csv_header(&log);
        for col in ["q_6_1", "kappa_3", "v_0"] {
            assert!(s.contains(&format!("\"{col}\"")) && header.iter().any(|h| h == col));
        }
        assert!(s.contains("edotnorm_6") && s.contains("omegaerr_1"));
    }

    #[test]
    fn summary_of_short_run() {
        let (sc, log) = short(true);
        let (summary, pe) = summarize(&log, &sc).unwrap();
        assert!(pe.is_none());
        assert_eq!(summary.followers.len(), 6);
        assert!(summary.agent_lyapunov_max_increment.unwrap() <= 1e-7);
        assert_eq!(summary.gates.len(), 4);
    }
}
