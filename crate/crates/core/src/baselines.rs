//! Reference methods: classical CCA through the whitened cross-covariance,
//! and the penalized alternation that replaces both covariances by the
//! identity (closed-form updates).

use crate::linalg::{inverse_sqrt, leading_singular_pair, norm1};
use crate::metrics::sample_correlation;
use crate::prox::soft_threshold;
use crate::solver::{fix_sign, CcaSolution};
use crate::{Error, Matrix, Result, Vector};
use alloc::vec::Vec;
use nalgebra::SVD;

/// Convergence threshold on the change of `u` and `v` between sweeps.
pub const PMA_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTriple {
    pub u: Vector,
    pub v: Vector,
    pub rho: f64,
}

fn check_rows(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            what: "rows of Y",
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    Ok(())
}

/// Top `k` singular triplets of `(X'X + ridge I)^{-1/2} X'Y (Y'Y + ridge I)^{-1/2}`,
/// mapped back to canonical vectors. Correlations come out sorted descending.
pub fn classical_cca(x: &Matrix, y: &Matrix, k: usize, ridge: f64) -> Result<Vec<CanonicalTriple>> {
    check_rows(x, y)?;
    if !(ridge >= 0.0) {
        return Err(Error::invalid("ridge", "must be nonnegative"));
    }
    let kx = inverse_sqrt(&x.tr_mul(x), ridge)?;
    let ky = inverse_sqrt(&y.tr_mul(y), ridge)?;
    let whitened = &kx * x.tr_mul(y) * &ky;
    let svd = SVD::new(whitened, true, true);
    let (a, bt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut out = Vec::with_capacity(k);
    for i in 0..k.min(svd.singular_values.len()) {
        let u = &kx * a.column(i);
        let v = &ky * bt.row(i).transpose();
        let (u, v) = fix_sign(u, v);
        out.push(CanonicalTriple {
            u,
            v,
            rho: svd.singular_values[i],
        });
    }
    out.sort_by(|l, r| r.rho.total_cmp(&l.rho));
    Ok(out)
}

fn shrink_normalize(c: &Vector, tau: f64) -> Option<Vector> {
    let s = c.map(|v| soft_threshold(v, tau));
    let n = s.norm();
    (n > 0.0).then(|| s / n)
}

/// Alternating closed-form updates `u = S(X'Yv, tau_u) / |.|`,
/// `v = S(Y'Xu, tau_v) / |.|`, started from the leading right singular
/// vector of `X'Y`, `u` first.
pub fn pma_cca(x: &Matrix, y: &Matrix, tau_u: f64, tau_v: f64, max_iter: usize) -> Result<CcaSolution> {
    check_rows(x, y)?;
    if !(tau_u >= 0.0 && tau_v >= 0.0) {
        return Err(Error::invalid("tau", "penalties must be nonnegative"));
    }
    let (p, q) = (x.ncols(), y.ncols());
    let cross = x.tr_mul(y);
    let (_, mut v, _) = leading_singular_pair(&cross, 1000, 0);
    let mut u = Vector::zeros(p);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    let zero = |iters, history| CcaSolution {
        u_hat: Vector::zeros(p),
        v_hat: Vector::zeros(q),
        sample_corr: 0.0,
        l1_u: 0.0,
        l1_v: 0.0,
        converged: true,
        zero_solution: true,
        outer_iters: iters,
        inner_iters: 0,
        objective_history: history,
        primal_residual: 0.0,
        dual_residual: 0.0,
    };
    while iters < max_iter.max(1) {
        iters += 1;
        let Some(u_next) = shrink_normalize(&(&cross * &v), tau_u) else {
            return Ok(zero(iters, history));
        };
        let Some(v_next) = shrink_normalize(&cross.tr_mul(&u_next), tau_v) else {
            return Ok(zero(iters, history));
        };
        let change = (&u_next - &u).amax().max((&v_next - &v).amax());
        u = u_next;
        v = v_next;
        history.push(-u.dot(&(&cross * &v)) + tau_u * norm1(u.as_slice()) + tau_v * norm1(v.as_slice()));
        if change <= PMA_TOL {
            converged = true;
            break;
        }
    }
    let (u, v) = fix_sign(u, v);
    let sample_corr = sample_correlation(x, y, u.as_slice(), v.as_slice())?;
    Ok(CcaSolution {
        l1_u: norm1(u.as_slice()),
        l1_v: norm1(v.as_slice()),
        u_hat: u,
        v_hat: v,
        sample_corr,
        converged,
        zero_solution: false,
        outer_iters: iters,
        inner_iters: 0,
        objective_history: history,
        primal_residual: 0.0,
        dual_residual: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_correlation_is_one() {
        let x = Matrix::from_row_slice(5, 2, &[1.0, 0.5, -1.0, 2.0, 0.3, -1.0, 2.0, 0.1, -2.3, -1.6]);
        let t = classical_cca(&x, &x, 2, 0.0).unwrap();
        assert!((t[0].rho - 1.0).abs() < 1e-8 && (t[1].rho - 1.0).abs() < 1e-8);
        assert!(t[0].rho >= t[1].rho);
    }

    #[test]
    fn singular_gram_needs_ridge() {
        let x = Matrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -3.0, -3.0]);
        assert_eq!(classical_cca(&x, &x, 1, 0.0), Err(Error::SingularGram));
        assert!(classical_cca(&x, &x, 1, 1e-3).is_ok());
    }

    #[test]
    fn pma_unpenalized_is_leading_singular_pair() {
        let x = Matrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        let y = Matrix::from_row_slice(3, 2, &[0.0, 2.0, 0.0, -2.0, 0.0, 0.0]);
        let s = pma_cca(&x, &y, 0.0, 0.0, 100).unwrap();
        assert!((s.u_hat[0] - 1.0).abs() < 1e-10 && (s.v_hat[1].abs() - 1.0).abs() < 1e-10);
        assert!(s.converged);
        let z = pma_cca(&x, &y, 10.0, 0.0, 100).unwrap();
        assert!(z.zero_solution);
    }
}
