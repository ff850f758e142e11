//! Linearized ADMM for one convex block of the biconvex problem:
//!
//! ```text
//! minimize  -c'u + tau |u|_1   subject to  A u = z,  z in C
//! ```
//!
//! where `C` is the unit ball on the first `A.ball_rows()` coordinates of `z`
//! and `{0}` on the rest. With `xi` the scaled dual (`xi = phi / rho`,
//! `rho = 1 / lambda`) one iteration is
//!
//! ```text
//! u  <- prox_{mu f}(u - (mu/lambda) A'(A u - z + xi))
//! z  <- P_C(A u + xi)
//! xi <- xi + A u - z
//! ```
//!
//! which converges when `mu * sigma_max(A)^2 <= lambda`.

use crate::linalg::{dot, norm2};
use crate::linop::{estimate_spectral_norm, LinearOperator};
use crate::prox::{project_constraint, prox_f_into, soft_threshold, ProxFParams};
use crate::{Error, Result, Vector};
#[allow(unused_imports)] // inherent f64 methods shadow it whenever std is linked
use num_traits::Float;

/// Multiplier applied to the power-iteration estimate of `sigma_max`.
pub const NORM_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverConfig {
    pub tau_u: f64,
    pub tau_v: f64,
    /// Primal prox step. Ignored when `auto_step` is set.
    pub mu: f64,
    /// ADMM parameter, the inverse of the augmented-Lagrangian penalty.
    pub lambda: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub inner_max_iter: usize,
    pub outer_max_iter: usize,
    /// Derive `mu = lambda / (1.05 sigma_max(A))^2` per operator.
    pub auto_step: bool,
    /// Use `lambda * 1.05 sigma_max(A)` in place of `lambda` for each
    /// operator. Much faster on ill-conditioned data; the minimizer is the
    /// same.
    pub scale_lambda: bool,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau_u: 0.0,
            tau_v: 0.0,
            mu: 1.0,
            lambda: 1.0,
            alpha_x: 1.0,
            alpha_y: 1.0,
            inner_tol: 1e-6,
            outer_tol: 1e-5,
            inner_max_iter: 5000,
            outer_max_iter: 100,
            auto_step: true,
            scale_lambda: false,
            power_iters: 100,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_taus(mut self, tau_u: f64, tau_v: f64) -> Self {
        self.tau_u = tau_u;
        self.tau_v = tau_v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !nonneg(self.tau_u) || !nonneg(self.tau_v) {
            return Err(Error::invalid("tau", "penalties must be finite and nonnegative"));
        }
        if !pos(self.mu) || !pos(self.lambda) {
            return Err(Error::invalid("mu/lambda", "step parameters must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha_x) || !(0.0..=1.0).contains(&self.alpha_y) {
            return Err(Error::invalid("alpha", "bridge weights must lie in [0, 1]"));
        }
        if !pos(self.inner_tol) || !pos(self.outer_tol) {
            return Err(Error::invalid("tol", "tolerances must be positive"));
        }
        if self.inner_max_iter == 0 || self.outer_max_iter == 0 || self.power_iters == 0 {
            return Err(Error::invalid("max_iter", "iteration caps must be positive"));
        }
        Ok(())
    }
}

/// Iterate triple of the inner solver plus diagnostics of its last run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub u: Vector,
    pub z: Vector,
    pub xi: Vector,
    /// Iterations spent in the call that produced this state.
    pub iter: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl AdmmState {
    pub fn zeros(cols: usize, rows: usize) -> Self {
        Self {
            u: Vector::zeros(cols),
            z: Vector::zeros(rows),
            xi: Vector::zeros(rows),
            iter: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: false,
        }
    }

    fn fits<A: LinearOperator + ?Sized>(&self, op: &A) -> bool {
        self.u.len() == op.cols() && self.z.len() == op.rows() && self.xi.len() == op.rows()
    }
}

/// Step sizes bound to one operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub mu: f64,
    pub lambda: f64,
    pub sigma_max: f64,
}

impl StepSizes {
    pub fn for_operator<A: LinearOperator + ?Sized>(op: &A, cfg: &SolverConfig) -> Self {
        let sigma_max = estimate_spectral_norm(op, cfg.power_iters, cfg.seed) * NORM_SAFETY;
        let lambda = if cfg.scale_lambda && sigma_max > 0.0 {
            cfg.lambda * sigma_max
        } else {
            cfg.lambda
        };
        let mu = if cfg.auto_step {
            if sigma_max > 0.0 {
                lambda / (sigma_max * sigma_max)
            } else {
                lambda
            }
        } else {
            cfg.mu
        };
        Self {
            mu,
            lambda,
            sigma_max,
        }
    }
}

/// Inner solver bound to one operator; the spectral norm is estimated once
/// and reused across calls with different gradients.
pub struct AdmmSolver<A> {
    op: A,
    steps: StepSizes,
    tol: f64,
    max_iter: usize,
}

impl<A: LinearOperator> AdmmSolver<A> {
    pub fn new(op: A, cfg: &SolverConfig) -> Self {
        let steps = StepSizes::for_operator(&op, cfg);
        Self {
            op,
            steps,
            tol: cfg.inner_tol,
            max_iter: cfg.inner_max_iter,
        }
    }

    /// Same operator and step sizes with a different stopping rule.
    pub fn with_stopping(&self, tol: f64, max_iter: usize) -> Self
    where
        A: Clone,
    {
        Self {
            op: self.op.clone(),
            steps: self.steps,
            tol,
            max_iter,
        }
    }

    pub fn operator(&self) -> &A {
        &self.op
    }

    pub fn steps(&self) -> StepSizes {
        self.steps
    }

    /// Runs the iteration from `warm` (or zeros) until both residuals drop
    /// below the tolerance or the iteration cap is hit.
    pub fn solve(&self, c: &[f64], tau: f64, warm: Option<AdmmState>) -> Result<AdmmState> {
        let op = &self.op;
        let (rows, cols, n_ball) = (op.rows(), op.cols(), op.ball_rows());
        if c.len() != cols {
            return Err(Error::DimensionMismatch {
                what: "subproblem gradient",
                expected: cols,
                found: c.len(),
            });
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::invalid("tau", "must be finite and nonnegative"));
        }
        let mut state = match warm {
            Some(s) if s.fits(op) => s,
            Some(_) => {
                return Err(Error::DimensionMismatch {
                    what: "warm-start state",
                    expected: rows,
                    found: 0,
                })
            }
            None => AdmmState::zeros(cols, rows),
        };
        let StepSizes { mu, lambda, .. } = self.steps;
        let params = ProxFParams { c, mu, tau };
        let step = mu / lambda;

        let mut au = op.apply(state.u.as_slice());
        let mut au_next = Vector::zeros(rows);
        let mut resid = Vector::zeros(rows);
        let mut grad = Vector::zeros(cols);
        let mut x = Vector::zeros(cols);
        let mut u_next = Vector::zeros(cols);
        let mut z_next = Vector::zeros(rows);
        let mut dual_vec = Vector::zeros(cols);

        state.converged = false;
        for k in 1..=self.max_iter {
            // u-update: linearized prox step.
            for i in 0..rows {
                resid[i] = au[i] - state.z[i] + state.xi[i];
            }
            op.apply_transpose_into(resid.as_slice(), grad.as_mut_slice());
            for i in 0..cols {
                x[i] = state.u[i] - step * grad[i];
            }
            prox_f_into(x.as_slice(), &params, u_next.as_mut_slice());

            // z-update: projection onto the constraint set.
            op.apply_into(u_next.as_slice(), au_next.as_mut_slice());
            for i in 0..rows {
                z_next[i] = au_next[i] + state.xi[i];
            }
            project_constraint(z_next.as_mut_slice(), n_ball);

            // Scaled dual ascent.
            let mut primal_sq = 0.0;
            for i in 0..rows {
                let r = au_next[i] - z_next[i];
                state.xi[i] += r;
                primal_sq += r * r;
            }
            let primal = primal_sq.sqrt();
            if !primal.is_finite() || u_next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { iter: k });
            }

            state.primal_residual = primal;
            let check = primal <= self.tol || k == self.max_iter;
            if check {
                // s = -(u+ - u)/mu + A'[(A u+ - A u) - (z+ - z)] / lambda lies in
                // the gap between the u-optimality condition and the KKT system.
                for i in 0..rows {
                    resid[i] = (au_next[i] - au[i]) - (z_next[i] - state.z[i]);
                }
                op.apply_transpose_into(resid.as_slice(), dual_vec.as_mut_slice());
                let mut dual_sq = 0.0;
                for i in 0..cols {
                    let s = -(u_next[i] - state.u[i]) / mu + dual_vec[i] / lambda;
                    dual_sq += s * s;
                }
                state.dual_residual = dual_sq.sqrt();
            }

            core::mem::swap(&mut state.u, &mut u_next);
            core::mem::swap(&mut state.z, &mut z_next);
            core::mem::swap(&mut au, &mut au_next);
            state.iter = k;

            if check && state.dual_residual <= self.tol && primal <= self.tol {
                state.converged = true;
                break;
            }
        }
        Ok(state)
    }
}

/// One-shot form of [`AdmmSolver::solve`]: returns the minimizer estimate and
/// the final iterate triple.
pub fn solve_subproblem<A: LinearOperator>(
    op: A,
    c: &[f64],
    tau: f64,
    cfg: &SolverConfig,
    warm: Option<AdmmState>,
) -> Result<(Vector, AdmmState)> {
    cfg.validate()?;
    let state = AdmmSolver::new(op, cfg).solve(c, tau, warm)?;
    Ok((state.u.clone(), state))
}

/// Objective `-c'u + tau |u|_1` of one block.
pub fn subproblem_objective(c: &[f64], tau: f64, u: &[f64]) -> f64 {
    -dot(c, u) + tau * crate::linalg::norm1(u)
}

/// Largest violation of the KKT system of one block, with multiplier
/// `phi = xi / lambda`:
///
/// * primal: `|A u - z|`, plus the distance of `z` from `C`;
/// * stationarity: distance of `c - A' phi` from `tau d|u|_1`;
/// * normal cone: `|z - P_C(z + phi)|`, which vanishes iff `phi` is in the
///   normal cone of `C` at `z` (complementary slackness on the ball).
#[allow(clippy::too_many_arguments)]
pub fn kkt_residual<A: LinearOperator + ?Sized>(
    op: &A,
    c: &[f64],
    tau: f64,
    lambda: f64,
    u: &[f64],
    z: &[f64],
    xi: &[f64],
) -> Result<f64> {
    let (rows, cols) = (op.rows(), op.cols());
    if u.len() != cols || c.len() != cols {
        return Err(Error::DimensionMismatch {
            what: "KKT primal vector",
            expected: cols,
            found: u.len().min(c.len()),
        });
    }
    if z.len() != rows || xi.len() != rows {
        return Err(Error::DimensionMismatch {
            what: "KKT split/dual vector",
            expected: rows,
            found: z.len().min(xi.len()),
        });
    }
    let n_ball = op.ball_rows();
    let au = op.apply(u);
    let primal = au
        .iter()
        .zip(z)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let mut projected = Vector::from_column_slice(z);
    project_constraint(projected.as_mut_slice(), n_ball);
    let infeasibility = norm2((&projected - Vector::from_column_slice(z)).as_slice());

    let phi: Vector = Vector::from_column_slice(xi) / lambda;
    let atphi = op.apply_transpose(phi.as_slice());
    let mut stat_sq = 0.0;
    for i in 0..cols {
        let w = c[i] - atphi[i];
        let d = if u[i] > 0.0 {
            w - tau
        } else if u[i] < 0.0 {
            w + tau
        } else {
            // distance of w from [-tau, tau]
            soft_threshold(w, tau)
        };
        stat_sq += d * d;
    }
    let stationarity = stat_sq.sqrt();

    let mut shifted: Vector = Vector::from_column_slice(z) + &phi;
    project_constraint(shifted.as_mut_slice(), n_ball);
    let cone = norm2((Vector::from_column_slice(z) - shifted).as_slice());

    Ok(primal.max(infeasibility).max(stationarity).max(cone))
}
