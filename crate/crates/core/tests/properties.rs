//! Property tests against independent oracles written here from the model equations.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector5};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synclab_core::controller;
use synclab_core::graph::CommGraph;
use synclab_core::lagrange::{regressor, TwoLinkArmParams};
use synclab_core::leader::LeaderModel;
use synclab_core::observer::{
    neighborhood_error, observer_derivatives, ObserverBank, ObserverNodeState, RhoSpec,
};

/// Connected random topology: a random tree hanging off the leader plus extra undirected edges.
fn random_graph(n: usize, seed: u64) -> CommGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leader = n + 1;
    let mut edges = vec![(leader, 1)];
    let link = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>| {
        if a == leader {
            edges.push((a, b));
        } else {
            edges.push((a, b));
            edges.push((b, a));
        }
    };
    for j in 2..=n {
        let parent = rng.gen_range(0..j);
        link(if parent == 0 { leader } else { parent }, j, &mut edges);
    }
    for _ in 0..rng.gen_range(0..=n) {
        let a = rng.gen_range(1..=n + 1);
        let b = rng.gen_range(1..=n);
        if a != b {
            link(a, b, &mut edges);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    CommGraph::new(n, &edges).expect("constructed connected")
}

fn oracle_vdp_phi(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        2,
        3,
        &[v[1], 0.0, 0.0, 0.0, -v[0], (1.0 - v[0] * v[0]) * v[1]],
    )
}

// M, C, G written out from the two-link model equations
fn oracle_mcg(
    t: &[f64; 5],
    g: f64,
    q: &[f64; 2],
    qd: &[f64; 2],
) -> ([[f64; 2]; 2], [[f64; 2]; 2], [f64; 2]) {
    let (c1, c2, s2, c12) = (q[0].cos(), q[1].cos(), q[1].sin(), (q[0] + q[1]).cos());
    let m = [
        [t[0] + t[1] + 2.0 * t[2] * c2, t[1] + t[2] * c2],
        [t[1] + t[2] * c2, t[1]],
    ];
    let c = [
        [-t[2] * qd[1] * s2, -t[2] * (qd[0] + qd[1]) * s2],
        [t[2] * qd[0] * s2, 0.0],
    ];
    let gv = [t[3] * g * c1 + t[4] * g * c12, t[4] * g * c12];
    (m, c, gv)
}

fn mv(m: &[[f64; 2]; 2], x: &[f64; 2]) -> [f64; 2] {
    [
        m[0][0] * x[0] + m[0][1] * x[1],
        m[1][0] * x[0] + m[1][1] * x[1],
    ]
}

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    [-5.0..5.0f64, -5.0..5.0f64]
}

fn theta() -> impl Strategy<Value = [f64; 5]> {
    [
        0.1..2.0f64,
        0.1..2.0f64,
        0.0..0.5f64,
        0.0..2.0f64,
        0.0..2.0f64,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn laplacian_rows_sum_to_zero(n in 1usize..9, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        let l = g.laplacian();
        for r in 0..=n {
            prop_assert!(l.row(r).sum().abs() < 1e-12);
        }
        // leader row is empty
        prop_assert!(l.row(n).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn h_is_symmetric_positive_definite(n in 1usize..9, seed in any::<u64>()) {
        let h = random_graph(n, seed).h_matrix().unwrap();
        let m = h.matrix();
        prop_assert_eq!(m, &m.transpose());
        prop_assert!(h.min_eigenvalue() > 0.0);
        let chol = m.clone().cholesky();
        prop_assert!(chol.is_some());
    }

    #[test]
    fn stacked_neighborhood_error_identity(n in 1usize..9, seed in any::<u64>(), m in 1usize..4) {
        let g = random_graph(n, seed);
        let h = g.h_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let nodes: Vec<ObserverNodeState> = (0..n)
            .map(|_| ObserverNodeState {
                v_hat: DVector::from_fn(m, |_, _| rng.gen_range(-10.0..10.0)),
                omega_hat: DVector::zeros(1),
                kappa_hat: 1.0,
            })
            .collect();
        let mut v_tilde = Vec::new();
        for node in &nodes {
            v_tilde.extend(node.v_hat.iter().zip(&v).map(|(a, b)| a - b));
        }
        let bank = ObserverBank::new(nodes, 1.0, vec![RhoSpec::reference(); n]).unwrap();
        let hv = h.kron_apply(&v_tilde, m);
        for i in 0..n {
            let z = neighborhood_error(&bank, &g, &v, i).unwrap();
            for k in 0..m {
                prop_assert!((z[k] + hv[i * m + k]).abs() <= 1e-12 * (1.0 + hv[i * m + k].abs()));
            }
        }
    }

    #[test]
    fn leader_drift_is_linear_in_parameters(
        v in vec2(),
        w1 in [-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64],
        w2 in [-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64],
        a in -4.0..4.0f64,
        b in -4.0..4.0f64,
    ) {
        let model = LeaderModel::van_der_pol([1.0, 1.0, 1.0]);
        let combo: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
        let lhs = model.eval_p(&v, &combo).unwrap();
        let rhs = model.eval_p(&v, &w1).unwrap() * a + model.eval_p(&v, &w2).unwrap() * b;
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
        let phi = model.eval_phi(&v).unwrap();
        prop_assert!((phi - oracle_vdp_phi(&v)).norm() == 0.0);
    }

    #[test]
    fn regressor_rate_matches_finite_difference(v in vec2(), vd in vec2()) {
        let model = LeaderModel::van_der_pol([1.0, 1.0, 1.0]);
        let h = 1e-6;
        let fwd: Vec<f64> = v.iter().zip(&vd).map(|(x, d)| x + h * d).collect();
        let bwd: Vec<f64> = v.iter().zip(&vd).map(|(x, d)| x - h * d).collect();
        let fd = (oracle_vdp_phi(&fwd) - oracle_vdp_phi(&bwd)) / (2.0 * h);
        let rate = model.regressor_rate(&v, &vd).unwrap();
        prop_assert!((rate - &fd).norm() <= 1e-5 * (1.0 + fd.norm()));
    }

    #[test]
    fn adaptive_gain_rate_is_nonnegative(n in 1usize..7, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        let model = LeaderModel::van_der_pol([1.0, 1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..n)
            .map(|_| ObserverNodeState {
                v_hat: DVector::from_fn(2, |_, _| rng.gen_range(-5.0..5.0)),
                omega_hat: DVector::from_fn(3, |_, _| rng.gen_range(-5.0..5.0)),
                kappa_hat: rng.gen_range(0.0..5.0),
            })
            .collect();
        let bank = ObserverBank::new(nodes, 10.0, vec![RhoSpec::reference(); n]).unwrap();
        for r in observer_derivatives(&bank, &g, &model, &[2.0, 2.0]).unwrap() {
            prop_assert!(r.kappa_hat_dot >= 0.0);
            prop_assert!(r.rho >= 1.0);
        }
    }

    #[test]
    fn regressor_reproduces_dynamics(th in theta(), q in vec2(), qd in vec2(), a in vec2(), ad in vec2()) {
        let g = 9.8;
        let y = regressor(g, &Vector2::from(q), &Vector2::from(qd), &Vector2::from(a), &Vector2::from(ad));
        let lhs = y * Vector5::from(th);
        let (m, c, gv) = oracle_mcg(&th, g, &q, &qd);
        let (ma, cad) = (mv(&m, &a), mv(&c, &ad));
        let rhs = Vector2::new(ma[0] + cad[0] + gv[0], ma[1] + cad[1] + gv[1]);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn mdot_minus_two_c_is_skew(th in theta(), q in vec2(), qd in vec2(), x in vec2()) {
        let p = TwoLinkArmParams::new(th, 9.8);
        let (q, qd, x) = (Vector2::from(q), Vector2::from(qd), Vector2::from(x));
        let n: Matrix2<f64> = p.mass_matrix_rate(&q, &qd) - 2.0 * p.coriolis_matrix(&q, &qd);
        prop_assert!(x.dot(&(n * x)).abs() <= 1e-12 * (1.0 + x.norm_squared()));
    }

    #[test]
    fn mass_matrix_rate_matches_finite_difference(th in theta(), q in vec2(), qd in vec2()) {
        let p = TwoLinkArmParams::new(th, 9.8);
        let (q, qd) = (Vector2::from(q), Vector2::from(qd));
        let h = 1e-6;
        let fd = (p.mass_matrix(&(q + qd * h)) - p.mass_matrix(&(q - qd * h))) / (2.0 * h);
        prop_assert!((p.mass_matrix_rate(&q, &qd) - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
    }

    #[test]
    fn reference_acceleration_is_velocity_rate(
        v in vec2(),
        w in [-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64],
        wd in [-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64],
        vd in vec2(),
        q in vec2(),
        qd in vec2(),
    ) {
        let model = LeaderModel::van_der_pol([1.0, 1.0, 1.0]);
        let alpha = 2.0;
        let h = 1e-6;
        let shift = |s: f64| {
            let v: Vec<f64> = v.iter().zip(&vd).map(|(x, d)| x + s * d).collect();
            let w: Vec<f64> = w.iter().zip(&wd).map(|(x, d)| x + s * d).collect();
            let q = Vector2::from(q) + Vector2::from(qd) * s;
            controller::ref_velocity(&model, &v, &w, &q, alpha).unwrap()
        };
        let fd = (shift(h) - shift(-h)) / (2.0 * h);
        let acc = controller::ref_acceleration(&model, &v, &w, &wd, &vd, &Vector2::from(qd), alpha).unwrap();
        prop_assert!((acc - fd).norm() <= 1e-4 * (1.0 + fd.norm()));
    }
}
