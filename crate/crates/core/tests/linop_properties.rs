use proptest::prelude::*;
use scca_core::linalg::{gaussian_matrix, gaussian_vector, rng};
use scca_core::linop::{estimate_spectral_norm, Augmented, Bridge};
use scca_core::{LinearOperator, Matrix};

fn adjoint_gap<A: LinearOperator>(op: &A, seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = gaussian_vector(op.cols(), &mut r);
    let y = gaussian_vector(op.rows(), &mut r);
    let lhs = op.apply(x.as_slice()).dot(&y);
    let rhs = x.dot(&op.apply_transpose(y.as_slice()));
    (lhs - rhs).abs() / (lhs.abs().max(rhs.abs()).max(1e-300))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operators_are_adjoint(n in 1usize..30, p in 1usize..20, k in 0usize..4, alpha in 0.0..=1.0f64, seed in any::<u64>()) {
        let x = gaussian_matrix(n, p, &mut rng(seed));
        let m = gaussian_matrix(k, p, &mut rng(seed ^ 1));
        prop_assert!(adjoint_gap(&x, seed) <= 1e-8);
        let bridge = Bridge::new(&x, alpha).unwrap();
        prop_assert!(adjoint_gap(&bridge, seed) <= 1e-8);
        let aug = Augmented::new(bridge, m).unwrap();
        prop_assert!(adjoint_gap(&aug, seed) <= 1e-8);
    }

    #[test]
    fn bridge_realizes_convex_combination(alpha in 0.0..=1.0f64, seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = gaussian_matrix(12, 5, &mut r);
        let u = gaussian_vector(5, &mut r);
        let a = Bridge::new(&x, alpha).unwrap();
        let lhs = a.apply(u.as_slice()).norm_squared();
        let rhs = alpha * (&x * &u).norm_squared() + (1.0 - alpha) * u.norm_squared();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
    }
}

#[test]
fn power_iteration_matches_dense_svd() {
    let x = gaussian_matrix(20, 10, &mut rng(5));
    let dense = x.clone().singular_values().max();
    let est = estimate_spectral_norm(&x, 1000, 0);
    assert!((est - dense).abs() <= 1e-6 * dense, "{est} vs {dense}");
}

#[test]
fn power_iteration_is_a_monotone_lower_bound() {
    let x = gaussian_matrix(30, 15, &mut rng(6));
    let dense = x.clone().singular_values().max();
    let mut last = 0.0;
    for iters in [1, 2, 5, 10, 50] {
        let est = estimate_spectral_norm(&x, iters, 3);
        assert!(est <= dense * (1.0 + 1e-12));
        assert!(est >= last);
        last = est;
    }
}

#[test]
fn bridge_at_zero_is_an_isometry() {
    let x = gaussian_matrix(8, 6, &mut rng(1));
    let a = Bridge::new(&x, 0.0).unwrap();
    let mut r = rng(2);
    for _ in 0..20 {
        let u = gaussian_vector(6, &mut r);
        assert!((a.apply(u.as_slice()).norm() - u.norm()).abs() <= 1e-12);
    }
}

#[test]
fn bridge_at_half_on_first_basis_vector() {
    let x = gaussian_matrix(8, 3, &mut rng(4));
    let a = Bridge::new(&x, 0.5).unwrap();
    let got = a.apply(&[1.0, 0.0, 0.0]).norm_squared();
    let want = 0.5 * x.column(0).norm_squared() + 0.5;
    assert!((got - want).abs() <= 1e-12);
}

#[test]
fn bridge_at_one_is_exactly_x() {
    let x = gaussian_matrix(8, 3, &mut rng(4));
    let a = Bridge::new(&x, 1.0).unwrap();
    let u = [0.3, -1.2, 2.0];
    assert_eq!(a.apply(&u), LinearOperator::apply(&x, &u));
    let y = gaussian_vector(8, &mut rng(9));
    assert_eq!(a.apply_transpose(y.as_slice()), x.tr_mul(&y));
    let _: &Matrix = a.data();
}
