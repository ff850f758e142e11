//! Linear operators seen by the inner ADMM solver.
//!
//! The solver never needs the entries of its operator, only `A x` and
//! `A' y`, so the plain data matrix, the covariance bridge and the deflation
//! stack all share one trait.

use crate::linalg::{gaussian_vector, norm2, rng};
use crate::{Error, Matrix, Result, Vector};
use nalgebra::{DVectorView, DVectorViewMut};
#[allow(unused_imports)] // inherent f64 methods shadow it whenever std is linked
use num_traits::Float;

pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A x`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = A' y`.
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]);

    /// Number of leading output rows constrained to the unit ball. The
    /// remaining rows (if any) are constrained to zero.
    fn ball_rows(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64]) -> Vector {
        let mut out = Vector::zeros(self.rows());
        self.apply_into(x, out.as_mut_slice());
        out
    }

    fn apply_transpose(&self, y: &[f64]) -> Vector {
        let mut out = Vector::zeros(self.cols());
        self.apply_transpose_into(y, out.as_mut_slice());
        out
    }
}

impl LinearOperator for Matrix {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let x = DVectorView::from_slice(x, self.ncols());
        let mut out = DVectorViewMut::from_slice(out, self.nrows());
        out.gemv(1.0, self, &x, 0.0);
    }

    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        let y = DVectorView::from_slice(y, self.nrows());
        let mut out = DVectorViewMut::from_slice(out, self.ncols());
        out.gemv_tr(1.0, self, &y, 0.0);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }

    fn cols(&self) -> usize {
        (**self).cols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }

    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).apply_transpose_into(y, out)
    }

    fn ball_rows(&self) -> usize {
        (**self).ball_rows()
    }
}

/// `[sqrt(alpha) X; sqrt(1 - alpha) I]`, so that
/// `|A u|^2 = alpha |X u|^2 + (1 - alpha) |u|^2`.
///
/// At `alpha = 1` the operator is exactly `X`; at `alpha = 0` it is exactly
/// the identity and the constraint becomes the unit ball in `u`.
#[derive(Debug, Clone, Copy)]
pub struct Bridge<'a> {
    x: &'a Matrix,
    alpha: f64,
}

impl<'a> Bridge<'a> {
    pub fn new(x: &'a Matrix, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid("alpha", "must lie in [0, 1]"));
        }
        Ok(Self { x, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn data(&self) -> &'a Matrix {
        self.x
    }

    fn data_rows(&self) -> usize {
        if self.alpha > 0.0 {
            self.x.nrows()
        } else {
            0
        }
    }

    fn identity_rows(&self) -> usize {
        if self.alpha < 1.0 {
            self.x.ncols()
        } else {
            0
        }
    }
}

impl LinearOperator for Bridge<'_> {
    fn rows(&self) -> usize {
        self.data_rows() + self.identity_rows()
    }

    fn cols(&self) -> usize {
        self.x.ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.data_rows();
        let (top, bottom) = out.split_at_mut(n);
        if n > 0 {
            LinearOperator::apply_into(self.x, x, top);
            if self.alpha < 1.0 {
                let s = self.alpha.sqrt();
                top.iter_mut().for_each(|v| *v *= s);
            }
        }
        if self.identity_rows() > 0 {
            let s = (1.0 - self.alpha).sqrt();
            for (o, v) in bottom.iter_mut().zip(x) {
                *o = s * v;
            }
        }
    }

    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        let n = self.data_rows();
        let (top, bottom) = y.split_at(n);
        if n > 0 {
            self.x.apply_transpose_into(top, out);
            if self.alpha < 1.0 {
                let s = self.alpha.sqrt();
                out.iter_mut().for_each(|v| *v *= s);
            }
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
        if self.identity_rows() > 0 {
            let s = (1.0 - self.alpha).sqrt();
            for (o, v) in out.iter_mut().zip(bottom) {
                *o += s * v;
            }
        }
    }
}

/// `[A; M]` where the rows of `A` are ball-constrained and the rows of `M`
/// are constrained to zero. Used for deflation, with `M = U' A' A`.
#[derive(Debug, Clone)]
pub struct Augmented<A> {
    base: A,
    constraint: Matrix,
}

impl<A: LinearOperator> Augmented<A> {
    pub fn new(base: A, constraint: Matrix) -> Result<Self> {
        if constraint.ncols() != base.cols() {
            return Err(Error::DimensionMismatch {
                what: "columns of the deflation constraint",
                expected: base.cols(),
                found: constraint.ncols(),
            });
        }
        Ok(Self { base, constraint })
    }

    pub fn base(&self) -> &A {
        &self.base
    }

    pub fn constraint(&self) -> &Matrix {
        &self.constraint
    }
}

impl<A: LinearOperator> LinearOperator for Augmented<A> {
    fn rows(&self) -> usize {
        self.base.rows() + self.constraint.nrows()
    }

    fn cols(&self) -> usize {
        self.base.cols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (top, bottom) = out.split_at_mut(self.base.rows());
        self.base.apply_into(x, top);
        LinearOperator::apply_into(&self.constraint, x, bottom);
    }

    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        let (top, bottom) = y.split_at(self.base.rows());
        self.base.apply_transpose_into(top, out);
        if self.constraint.nrows() > 0 {
            let bottom = DVectorView::from_slice(bottom, self.constraint.nrows());
            let mut out = DVectorViewMut::from_slice(out, self.constraint.ncols());
            out.gemv_tr(1.0, &self.constraint, &bottom, 1.0);
        }
    }

    fn ball_rows(&self) -> usize {
        self.base.ball_rows()
    }
}

/// Power iteration on `A'A` from a seeded start. The returned `|A x_k|` for
/// the current unit iterate `x_k` never exceeds `sigma_max(A)` and does not
/// decrease with more iterations. A zero operator yields 0.
pub fn estimate_spectral_norm<A: LinearOperator + ?Sized>(op: &A, iters: usize, seed: u64) -> f64 {
    let cols = op.cols();
    if cols == 0 || op.rows() == 0 {
        return 0.0;
    }
    let mut rng = rng(seed);
    let mut x = gaussian_vector(cols, &mut rng);
    let nx = x.norm();
    x /= nx;
    let mut ax = Vector::zeros(op.rows());
    let mut estimate = 0.0_f64;
    for _ in 0..iters.max(1) {
        op.apply_into(x.as_slice(), ax.as_mut_slice());
        let s = norm2(ax.as_slice());
        let previous = estimate;
        estimate = estimate.max(s);
        if s == 0.0 {
            break;
        }
        op.apply_transpose_into(ax.as_slice(), x.as_mut_slice());
        let nx = x.norm();
        if nx == 0.0 {
            break;
        }
        x /= nx;
        if (s - previous).abs() <= 1e-15 * s {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norm_is_one() {
        let a = Matrix::identity(5, 5);
        assert!((estimate_spectral_norm(&a, 50, 3) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn diagonal_norm_is_largest_entry() {
        let a = Matrix::from_diagonal(&Vector::from_vec(alloc::vec![3.0, 1.0]));
        assert!((estimate_spectral_norm(&a, 100, 3) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn zero_operator_norm_is_zero() {
        assert_eq!(estimate_spectral_norm(&Matrix::zeros(3, 4), 10, 0), 0.0);
    }

    #[test]
    fn bridge_endpoints() {
        let x = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let one = Bridge::new(&x, 1.0).unwrap();
        assert_eq!(one.rows(), 2);
        assert_eq!(one.apply(&[1.0, -1.0]), LinearOperator::apply(&x, &[1.0, -1.0]));
        let zero = Bridge::new(&x, 0.0).unwrap();
        assert_eq!(zero.apply(&[1.0, -1.0]).as_slice(), &[1.0, -1.0]);
        assert!(Bridge::new(&x, 1.5).is_err());
    }

    #[test]
    fn augmented_stacks_rows() {
        let x = Matrix::identity(2, 2);
        let m = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let a = Augmented::new(&x, m).unwrap();
        assert_eq!(a.rows(), 3);
        assert_eq!(a.ball_rows(), 2);
        assert_eq!(a.apply(&[1.0, 2.0]).as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(a.apply_transpose(&[1.0, 0.0, 2.0]).as_slice(), &[3.0, 2.0]);
    }
}
