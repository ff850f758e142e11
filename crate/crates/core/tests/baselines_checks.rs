use scca_core::baselines::{classical_cca, pma_cca};
use scca_core::linalg::{gaussian_matrix, rng};
use scca_core::simulation::{make_truth, Family, JointSampler, ScenarioSpec};
use scca_core::{Dataset, Matrix};

fn standardized(x: Matrix, y: Matrix) -> Dataset {
    Dataset::standardize(&x, &y).unwrap()
}

#[test]
fn self_correlation() {
    let x = gaussian_matrix(50, 4, &mut rng(1));
    let d = standardized(x.clone(), x);
    let t = classical_cca(d.x(), d.y(), 4, 0.0).unwrap();
    assert!(t.iter().all(|c| (c.rho - 1.0).abs() < 1e-8));
    let scale = t[0].u.norm();
    assert!((&t[0].u - &t[0].v).norm() <= 1e-8 * scale);
}

#[test]
fn independent_blocks_have_small_leading_correlation() {
    let mut rhos: Vec<f64> = (0..100)
        .map(|seed| {
            let mut r = rng(seed);
            let d = standardized(gaussian_matrix(2000, 5, &mut r), gaussian_matrix(2000, 5, &mut r));
            classical_cca(d.x(), d.y(), 1, 0.0).unwrap()[0].rho
        })
        .collect();
    rhos.sort_by(f64::total_cmp);
    assert!(rhos[94] <= 0.3, "95% quantile {}", rhos[94]);
    assert!(rhos[99] <= 0.3);
}

/// Canonical correlations through Cholesky whitening, independent of the
/// inverse-square-root route.
fn cholesky_route(x: &Matrix, y: &Matrix) -> Vec<f64> {
    let lx = x.tr_mul(x).cholesky().unwrap().l();
    let ly = y.tr_mul(y).cholesky().unwrap().l();
    let lx_inv = lx.try_inverse().unwrap();
    let ly_inv = ly.try_inverse().unwrap();
    let w = &lx_inv * x.tr_mul(y) * ly_inv.transpose();
    let mut sv: Vec<f64> = w.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[test]
fn all_canonical_correlations_match_cholesky_route() {
    let mut r = rng(4);
    let latent = gaussian_matrix(300, 2, &mut r);
    let x = gaussian_matrix(300, 5, &mut r) + &latent * gaussian_matrix(2, 5, &mut r);
    let y = gaussian_matrix(300, 4, &mut r) + &latent * gaussian_matrix(2, 4, &mut r);
    let d = standardized(x, y);
    let ours: Vec<f64> = classical_cca(d.x(), d.y(), 4, 0.0).unwrap().iter().map(|t| t.rho).collect();
    let reference = cholesky_route(d.x(), d.y());
    assert_eq!(ours.len(), 4);
    for (a, b) in ours.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        assert!((-1e-8..=1.0 + 1e-8).contains(a));
    }
}

#[test]
fn rank_one_model_recovers_rho_with_many_samples() {
    let spec = ScenarioSpec {
        family: Family::Toeplitz { base: 0.5 },
        n: 20_000,
        p: 5,
        q: 5,
        s_u: 2,
        s_v: 2,
        rho: 0.7,
        seed: 3,
    };
    let truth = make_truth(&spec).unwrap();
    let d = JointSampler::new(&truth).unwrap().sample(spec.n, 1).unwrap().standardized().unwrap();
    let t = classical_cca(d.x(), d.y(), 1, 0.0).unwrap();
    assert!((t[0].rho - 0.7).abs() < 0.05, "{}", t[0].rho);
}

#[test]
fn pma_without_penalty_is_leading_singular_pair() {
    let mut r = rng(8);
    let d = standardized(gaussian_matrix(40, 6, &mut r), gaussian_matrix(40, 5, &mut r));
    let s = pma_cca(d.x(), d.y(), 0.0, 0.0, 10_000).unwrap();
    let svd = d.x().tr_mul(d.y()).svd(true, true);
    let k = svd.singular_values.imax();
    let a = svd.u.unwrap().column(k).into_owned();
    let b = svd.v_t.unwrap().row(k).transpose();
    let sign = a.dot(&s.u_hat).signum();
    assert!((&s.u_hat - &a * sign).amax() < 1e-6);
    assert!((&s.v_hat - &b * sign).amax() < 1e-6);
}

#[test]
fn pma_iterates_stay_in_the_ball_and_large_penalty_is_zero() {
    let mut r = rng(9);
    let d = standardized(gaussian_matrix(40, 6, &mut r), gaussian_matrix(40, 5, &mut r));
    for tau in [0.0, 0.01, 0.05, 0.1] {
        let s = pma_cca(d.x(), d.y(), tau, tau, 1000).unwrap();
        assert!(s.u_hat.norm() <= 1.0 + 1e-12 && s.v_hat.norm() <= 1.0 + 1e-12);
    }
    assert!(pma_cca(d.x(), d.y(), 100.0, 100.0, 1000).unwrap().zero_solution);
}
