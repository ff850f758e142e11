//! Small dense helpers on top of nalgebra.

use crate::{Error, Matrix, Result, Vector};
use alloc::vec::Vec;
use nalgebra::SymmetricEigen;
#[allow(unused_imports)] // inherent f64 methods shadow it whenever std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded generator used by every stochastic routine in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn is_zero(a: &[f64]) -> bool {
    a.iter().all(|v| *v == 0.0)
}

pub fn gaussian_vector(len: usize, rng: &mut SeededRng) -> Vector {
    Vector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Row-major fill so the draw order does not depend on the storage layout.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `G^{-1/2}` for a symmetric positive semidefinite `G`, regularized by
/// `ridge * I`.
pub fn inverse_sqrt(gram: &Matrix, ridge: f64) -> Result<Matrix> {
    let d = gram.nrows();
    let mut g = gram.clone();
    for i in 0..d {
        g[(i, i)] += ridge;
    }
    let eig = SymmetricEigen::new(g);
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-12 * max.max(1.0)) {
        return Err(Error::SingularGram);
    }
    let mut scaled = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = 1.0 / lam.sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(scaled * eig.eigenvectors.transpose())
}

/// Leading singular triplet `(u, v, sigma)` of `m` by power iteration on
/// `m'm`, started from a seeded Gaussian vector.
pub fn leading_singular_pair(m: &Matrix, max_iter: usize, seed: u64) -> (Vector, Vector, f64) {
    let mut rng = rng(seed);
    let mut v = gaussian_vector(m.ncols(), &mut rng);
    let nv = v.norm();
    v /= nv;
    let mut u = Vector::zeros(m.nrows());
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        u.gemv(1.0, m, &v, 0.0);
        let s = u.norm();
        if s == 0.0 {
            return (u, v, 0.0);
        }
        u /= s;
        let mut w = m.tr_mul(&u);
        let nw = w.norm();
        w /= nw;
        let change = (&w - &v).norm();
        v = w;
        sigma = nw;
        if change <= 1e-13 {
            break;
        }
    }
    u.gemv(1.0, m, &v, 0.0);
    let s = u.norm();
    if s > 0.0 {
        u /= s;
    }
    (u, v, sigma.max(s))
}

/// Threshold that keeps the `keep` largest absolute entries of `m` strictly
/// above it, i.e. the empirical `1 - keep/len` quantile of `|m|`.
pub fn top_k_threshold(m: &Matrix, keep: usize) -> f64 {
    let len = m.len();
    if len == 0 {
        return 0.0;
    }
    let keep = keep.clamp(1, len);
    if keep == len {
        return 0.0;
    }
    let mut abs: Vec<f64> = m.iter().map(|v| v.abs()).collect();
    let idx = len - keep - 1;
    let (_, kth, _) = abs.select_nth_unstable_by(idx, f64::total_cmp);
    *kth
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sqrt_of_diagonal() {
        let g = Matrix::from_diagonal(&Vector::from_vec(alloc::vec![4.0, 9.0]));
        let r = inverse_sqrt(&g, 0.0).unwrap();
        assert!((r[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((r[(1, 1)] - 1.0 / 3.0).abs() < 1e-14);
        assert!(r[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn singular_gram_without_ridge_fails() {
        let g = Matrix::from_diagonal(&Vector::from_vec(alloc::vec![1.0, 0.0]));
        assert_eq!(inverse_sqrt(&g, 0.0), Err(Error::SingularGram));
        assert!(inverse_sqrt(&g, 1e-3).is_ok());
    }

    #[test]
    fn top_k_threshold_keeps_k_entries() {
        let m = Matrix::from_row_slice(2, 3, &[0.1, -5.0, 2.0, 3.0, -0.2, 0.3]);
        let t = top_k_threshold(&m, 2);
        assert_eq!(t, 2.0);
        assert_eq!(m.iter().filter(|v| v.abs() > t).count(), 2);
        assert_eq!(top_k_threshold(&m, 6), 0.0);
    }

    #[test]
    fn power_iteration_matches_known_pair() {
        let m = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let (u, v, s) = leading_singular_pair(&m, 200, 1);
        assert!((s - 3.0).abs() < 1e-10);
        assert!((u[0].abs() - 1.0).abs() < 1e-10 && (v[0].abs() - 1.0).abs() < 1e-10);
    }
}
