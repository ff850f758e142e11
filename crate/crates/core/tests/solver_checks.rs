mod common;

use common::oracle;
use rand::Rng;
use scca_core::admm::subproblem_objective;
use scca_core::linalg::{gaussian_matrix, rng};
use scca_core::metrics::{gram_inner, loss};
use scca_core::prox::soft_threshold;
use scca_core::simulation::{make_truth, make_truth_with, Family, JointSampler, ScenarioSpec};
use scca_core::solver::{objective, solve_path};
use scca_core::{solve_first_pair, solve_rth_pair, Dataset, DeflationContext, Matrix, SolverConfig, Vector};

/// Standardized data with a planted correlated direction.
fn correlated_data(n: usize, p: usize, q: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let latent = gaussian_matrix(n, 1, &mut r);
    let mut x = gaussian_matrix(n, p, &mut r);
    let mut y = gaussian_matrix(n, q, &mut r);
    let wx: Vec<f64> = (0..p).map(|_| r.random_range(-1.5..1.5)).collect();
    let wy: Vec<f64> = (0..q).map(|_| r.random_range(-1.5..1.5)).collect();
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] += wx[j] * latent[(i, 0)];
        }
        for j in 0..q {
            y[(i, j)] += wy[j] * latent[(i, 0)];
        }
    }
    Dataset::standardize(&x, &y).unwrap()
}

fn block_objectives(d: &Dataset, u: &Vector, v: &Vector, tau_u: f64, tau_v: f64, m: (Option<&Matrix>, Option<&Matrix>)) -> [(f64, f64); 2] {
    let (x, y) = (d.x(), d.y());
    let cu = x.tr_mul(&(y * v));
    let cv = y.tr_mul(&(x * u));
    let ou = oracle::solve(&x.tr_mul(x), cu.as_slice(), tau_u, m.0).objective;
    let ov = oracle::solve(&y.tr_mul(y), cv.as_slice(), tau_v, m.1).objective;
    [
        (subproblem_objective(cu.as_slice(), tau_u, u.as_slice()), ou),
        (subproblem_objective(cv.as_slice(), tau_v, v.as_slice()), ov),
    ]
}

#[test]
fn fixed_point_solves_both_blocks() {
    let cfg = SolverConfig::default().with_taus(0.05, 0.05);
    for seed in 0..5 {
        let d = correlated_data(30, 4, 4, seed);
        let s = solve_first_pair(&d, &cfg, None).unwrap();
        assert!(s.converged && !s.zero_solution, "seed {seed}");
        for (ours, reference) in block_objectives(&d, &s.u_hat, &s.v_hat, 0.05, 0.05, (None, None)) {
            assert!((ours - reference).abs() <= 1e-4, "seed {seed}: {ours} vs {reference}");
        }
    }
}

#[test]
fn objective_history_is_monotone_and_solutions_feasible() {
    let mut r = rng(99);
    for seed in 0..20 {
        let n = r.random_range(20..60);
        let p = r.random_range(3..12);
        let q = r.random_range(3..12);
        let tau = r.random_range(0.0..0.2);
        let d = correlated_data(n, p, q, 1000 + seed);
        let cfg = SolverConfig::default().with_taus(tau, tau);
        let s = solve_first_pair(&d, &cfg, None).unwrap();
        for w in s.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 10.0 * cfg.inner_tol, "seed {seed}: {:?}", s.objective_history);
        }
        assert!((d.x() * &s.u_hat).norm() <= 1.0 + 1e-6);
        assert!((d.y() * &s.v_hat).norm() <= 1.0 + 1e-6);
        if !s.zero_solution {
            let obj = objective(d.x(), d.y(), s.u_hat.as_slice(), s.v_hat.as_slice(), tau, tau);
            assert!(obj <= 0.0);
        }
    }
}

#[test]
fn penalties_above_cross_product_bounds_give_zero() {
    let d = correlated_data(40, 5, 5, 3);
    let bound = d.x().tr_mul(d.y()).amax();
    // |c_i| <= max|X'Y| * |v|_1 and the start has |Yv| = 1, so any tau above
    // the largest possible gradient entry kills u in the first step.
    let cfg = SolverConfig::default().with_taus(100.0 * bound, 100.0 * bound);
    let s = solve_first_pair(&d, &cfg, None).unwrap();
    assert!(s.zero_solution && s.converged);
    assert_eq!(s.l1_u + s.l1_v, 0.0);
}

#[test]
fn identity_bridge_endpoint_reproduces_normalized_soft_threshold() {
    let d = correlated_data(40, 6, 5, 4);
    let tau = 0.1;
    let cfg = SolverConfig {
        alpha_x: 0.0,
        alpha_y: 0.0,
        outer_tol: 1e-12,
        inner_tol: 1e-9,
        inner_max_iter: 20_000,
        ..SolverConfig::default().with_taus(tau, tau)
    };
    let s = solve_first_pair(&d, &cfg, None).unwrap();
    assert!(!s.zero_solution);
    assert!(s.u_hat.norm() <= 1.0 + 1e-6 && s.v_hat.norm() <= 1.0 + 1e-6);
    // With A = I the u-block has the closed form S(c, tau) / |S(c, tau)|.
    let c = d.x().tr_mul(&(d.y() * &s.v_hat));
    let shrunk = c.map(|v| soft_threshold(v, tau));
    let closed = &shrunk / shrunk.norm();
    assert!((&closed - &s.u_hat).amax() < 1e-6, "{closed} vs {}", s.u_hat);
}

#[test]
fn bridge_at_one_equals_default_operator() {
    let d = correlated_data(30, 5, 4, 5);
    let base = SolverConfig::default().with_taus(0.05, 0.05);
    let explicit = SolverConfig {
        alpha_x: 1.0,
        alpha_y: 1.0,
        ..base.clone()
    };
    assert_eq!(
        solve_first_pair(&d, &base, None).unwrap(),
        solve_first_pair(&d, &explicit, None).unwrap()
    );
}

#[test]
fn path_returns_input_order_and_handles_zero_solutions() {
    let d = correlated_data(50, 6, 6, 6);
    let cfg = SolverConfig::default();
    let taus = [(0.02, 0.02), (50.0, 50.0), (0.1, 0.1)];
    let path = solve_path(&d, &cfg, &taus, None).unwrap();
    assert_eq!(path.len(), 3);
    assert!(path[1].zero_solution);
    assert!(!path[0].zero_solution && !path[2].zero_solution);
    assert!(path[0].l1_u + path[0].l1_v >= path[2].l1_u + path[2].l1_v);
    for (s, (tu, tv)) in path.iter().zip(taus) {
        let cold = solve_first_pair(&d, &cfg.clone().with_taus(tu, tv), None).unwrap();
        let (a, b) = (
            objective(d.x(), d.y(), s.u_hat.as_slice(), s.v_hat.as_slice(), tu, tv),
            objective(d.x(), d.y(), cold.u_hat.as_slice(), cold.v_hat.as_slice(), tu, tv),
        );
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

fn rank_two_data(n: usize, p: usize, s: usize, seed: u64) -> (Dataset, scca_core::simulation::TruthSpec) {
    let spec = ScenarioSpec {
        family: Family::Identity,
        n,
        p,
        q: p,
        s_u: s,
        s_v: s,
        rho: 0.9,
        seed,
    };
    let truth = make_truth_with(&spec, &[0.9, 0.5]).unwrap();
    let d = JointSampler::new(&truth).unwrap().sample(n, seed + 1).unwrap();
    (d.standardized().unwrap(), truth)
}

#[test]
fn deflated_pair_matches_constrained_oracle() {
    let (d, _) = rank_two_data(60, 5, 2, 3);
    let cfg = SolverConfig::default().with_taus(0.02, 0.02);
    let first = solve_first_pair(&d, &cfg, None).unwrap();
    let ctx = DeflationContext::from_solutions(std::slice::from_ref(&first)).unwrap();
    let second = solve_rth_pair(&d, &ctx, &cfg, None).unwrap();
    assert!(!second.zero_solution);
    let (x, y) = (d.x(), d.y());
    let mx = Matrix::from_row_slice(1, 5, (x.tr_mul(&(x * &first.u_hat))).as_slice());
    let my = Matrix::from_row_slice(1, 5, (y.tr_mul(&(y * &first.v_hat))).as_slice());
    assert!((&mx * &second.u_hat).amax() <= 1e-5);
    assert!((&my * &second.v_hat).amax() <= 1e-5);
    for (ours, reference) in block_objectives(&d, &second.u_hat, &second.v_hat, 0.02, 0.02, (Some(&mx), Some(&my))) {
        assert!((ours - reference).abs() <= 1e-4, "{ours} vs {reference}");
    }
}

#[test]
fn deflation_recovers_second_pair_orthogonally() {
    let (d, truth) = rank_two_data(400, 60, 4, 17);
    let cfg = SolverConfig {
        scale_lambda: true,
        ..SolverConfig::default().with_taus(0.08, 0.08)
    };
    let first = solve_first_pair(&d, &cfg, None).unwrap();
    assert!(loss(first.u_hat.as_slice(), truth.u_true.as_slice()).unwrap() < 0.2);
    let ctx = DeflationContext::from_solutions(std::slice::from_ref(&first)).unwrap();
    let second = solve_rth_pair(&d, &ctx, &cfg, None).unwrap();
    assert!(gram_inner(d.x(), first.u_hat.as_slice(), second.u_hat.as_slice()).abs() <= 1e-5);
    assert!(gram_inner(d.y(), first.v_hat.as_slice(), second.v_hat.as_slice()).abs() <= 1e-5);
    assert!((d.x() * &second.u_hat).norm() <= 1.0 + 1e-6);
    let e2 = loss(second.u_hat.as_slice(), truth.higher[0].u.as_slice()).unwrap();
    assert!(e2 < 0.3, "loss of the second pair {e2}");
}

#[test]
fn identity_scenario_pipeline_at_full_size() {
    let spec = ScenarioSpec {
        family: Family::Identity,
        n: 400,
        p: 800,
        q: 800,
        s_u: 5,
        s_v: 5,
        rho: 0.9,
        seed: 1,
    };
    let truth = make_truth(&spec).unwrap();
    let d = JointSampler::new(&truth).unwrap().sample(400, 7).unwrap().standardized().unwrap();
    let cfg = SolverConfig {
        scale_lambda: true,
        ..SolverConfig::default().with_taus(0.1, 0.1)
    };
    let s = solve_first_pair(&d, &cfg, None).unwrap();
    let e = loss(s.u_hat.as_slice(), truth.u_true.as_slice()).unwrap();
    assert!(e <= 0.15, "loss {e}");
}
