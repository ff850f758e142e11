//! Closed-form proximal maps of the two blocks of the split subproblem.
//!
//! With `f(u) = tau |u|_1 - c'u` and `g` the indicator of the unit ball,
//!
//! ```text
//! prox_{mu f}(x) = S(x + mu c, mu tau)        (soft threshold)
//! prox_g(z)      = z / max(1, |z|_2)          (ball projection)
//! ```

use crate::linalg::norm2;
use crate::{Error, Result, Vector};

/// Parameters of the soft-threshold map.
#[derive(Debug, Clone, Copy)]
pub struct ProxFParams<'a> {
    /// Gradient of the bilinear term, `X'Yv` for the `u` block.
    pub c: &'a [f64],
    pub mu: f64,
    pub tau: f64,
}

impl ProxFParams<'_> {
    fn validate(&self, len: usize) -> Result<()> {
        if self.c.len() != len {
            return Err(Error::DimensionMismatch {
                what: "prox_f gradient",
                expected: len,
                found: self.c.len(),
            });
        }
        if !(self.mu > 0.0) {
            return Err(Error::invalid("mu", "must be positive"));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::invalid("tau", "must be nonnegative"));
        }
        Ok(())
    }
}

#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Elementwise `S(x + mu c, mu tau)`.
pub fn prox_f(x: &[f64], params: &ProxFParams<'_>) -> Result<Vector> {
    params.validate(x.len())?;
    let mut out = Vector::zeros(x.len());
    prox_f_into(x, params, out.as_mut_slice());
    Ok(out)
}

/// Unchecked in-place variant used inside the ADMM loop.
pub(crate) fn prox_f_into(x: &[f64], params: &ProxFParams<'_>, out: &mut [f64]) {
    let t = params.mu * params.tau;
    for ((o, xi), ci) in out.iter_mut().zip(x).zip(params.c) {
        *o = soft_threshold(xi + params.mu * ci, t);
    }
}

/// Projection onto the closed unit ball.
pub fn prox_g(z: &[f64]) -> Vector {
    let mut out = Vector::from_column_slice(z);
    project_ball(out.as_mut_slice());
    out
}

/// Projection onto `{ |z_head|_2 <= 1, z_tail = 0 }` where the head is the
/// first `n_ball` coordinates.
pub fn prox_g_augmented(z: &[f64], n_ball: usize) -> Result<Vector> {
    if n_ball > z.len() {
        return Err(Error::DimensionMismatch {
            what: "ball block of the split variable",
            expected: z.len(),
            found: n_ball,
        });
    }
    let mut out = Vector::from_column_slice(z);
    project_constraint(out.as_mut_slice(), n_ball);
    Ok(out)
}

pub(crate) fn project_ball(z: &mut [f64]) {
    let nz = norm2(z);
    if nz > 1.0 {
        z.iter_mut().for_each(|v| *v /= nz);
    }
}

pub(crate) fn project_constraint(z: &mut [f64], n_ball: usize) {
    let (head, tail) = z.split_at_mut(n_ball);
    project_ball(head);
    tail.iter_mut().for_each(|v| *v = 0.0);
}
