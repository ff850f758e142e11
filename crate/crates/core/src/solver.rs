//! Outer alternation between the `u` and `v` subproblems, the thresholded-SVD
//! starting point and deflation for higher canonical pairs.

use crate::admm::{AdmmSolver, AdmmState};
use crate::linalg::{is_zero, leading_singular_pair, norm1, norm2, top_k_threshold};
use crate::linop::{Augmented, Bridge, LinearOperator};
use crate::metrics::sample_correlation;
use crate::prox::{project_constraint, soft_threshold};
use crate::{Dataset, Error, Matrix, Result, SolverConfig, Vector};
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::SVD;
use core::ops::RangeInclusive;


/// Normalization denominators at or below this are treated as zero.
const NULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CcaSolution {
    pub u_hat: Vector,
    pub v_hat: Vector,
    /// Sample correlation of `(X u_hat, Y v_hat)`; 0 for a zero solution.
    pub sample_corr: f64,
    pub l1_u: f64,
    pub l1_v: f64,
    pub converged: bool,
    /// Set when the penalties drove `u` or `v` to exactly zero.
    pub zero_solution: bool,
    pub outer_iters: usize,
    /// Total ADMM iterations over both blocks.
    pub inner_iters: usize,
    /// Objective after each outer iteration.
    pub objective_history: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Previously found pairs, stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationContext {
    pub u_prev: Matrix,
    pub v_prev: Matrix,
    pub r: usize,
}

impl DeflationContext {
    pub fn new(u_prev: Matrix, v_prev: Matrix) -> Result<Self> {
        if u_prev.ncols() != v_prev.ncols() {
            return Err(Error::DimensionMismatch {
                what: "number of previous pairs",
                expected: u_prev.ncols(),
                found: v_prev.ncols(),
            });
        }
        if u_prev.ncols() == 0 {
            return Err(Error::invalid("r", "deflation needs at least one previous pair"));
        }
        let r = u_prev.ncols() + 1;
        Ok(Self { u_prev, v_prev, r })
    }

    /// Context for the pair after those in `solutions`.
    pub fn from_solutions(solutions: &[CcaSolution]) -> Result<Self> {
        let first = solutions
            .first()
            .ok_or_else(|| Error::invalid("r", "deflation needs at least one previous pair"))?;
        let (p, q) = (first.u_hat.len(), first.v_hat.len());
        let u = Matrix::from_fn(p, solutions.len(), |i, j| solutions[j].u_hat[i]);
        let v = Matrix::from_fn(q, solutions.len(), |i, j| solutions[j].v_hat[i]);
        Self::new(u, v)
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        if self.u_prev.nrows() != data.p() || self.v_prev.nrows() != data.q() {
            return Err(Error::DimensionMismatch {
                what: "rows of the previous canonical vectors",
                expected: data.p(),
                found: self.u_prev.nrows(),
            });
        }
        if self.r != self.u_prev.ncols() + 1 || self.r < 2 {
            return Err(Error::invalid("r", "must equal the number of previous pairs plus one"));
        }
        let feasible = |m: &Matrix, d: &Matrix| {
            m.column_iter()
                .all(|c| (d * c).norm() <= 1.0 + 1e-6)
        };
        if !feasible(&self.u_prev, data.x()) || !feasible(&self.v_prev, data.y()) {
            return Err(Error::invalid("u_prev/v_prev", "previous pairs must satisfy |Xu| <= 1"));
        }
        Ok(())
    }
}

/// `[sqrt(alpha) X; sqrt(1 - alpha) I]`.
pub fn bridge_operator(x: &Matrix, alpha: f64) -> Result<Bridge<'_>> {
    Bridge::new(x, alpha)
}

/// Flips both vectors when the largest-magnitude entry of `u` (lowest index
/// on ties) is negative.
pub fn fix_sign(u: Vector, v: Vector) -> (Vector, Vector) {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &x in u.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        (-u, -v)
    } else {
        (u, v)
    }
}

/// `-u'X'Yv + tau_u |u|_1 + tau_v |v|_1`.
pub fn objective(x: &Matrix, y: &Matrix, u: &[f64], v: &[f64], tau_u: f64, tau_v: f64) -> f64 {
    let xu = x * Vector::from_column_slice(u);
    let yv = y * Vector::from_column_slice(v);
    -xu.dot(&yv) + tau_u * norm1(u) + tau_v * norm1(v)
}

/// Default soft-threshold for [`initialize`]: the `1 - (p + q)/(pq)`
/// quantile of `|X'Y|`, i.e. on average one surviving entry per row and
/// column.
pub fn default_threshold(cross: &Matrix) -> f64 {
    top_k_threshold(cross, cross.nrows() + cross.ncols())
}

/// Starting pair from the thresholded SVD of `X'Y`.
pub fn initialize(x: &Matrix, y: &Matrix, threshold: f64) -> Result<(Vector, Vector)> {
    check_blocks(x, y)?;
    initialize_from(x, y, &x.tr_mul(y), threshold)
}

/// [`initialize`] with the cross-product matrix supplied, e.g. after
/// removing the contribution of earlier pairs.
pub fn initialize_from(x: &Matrix, y: &Matrix, cross: &Matrix, threshold: f64) -> Result<(Vector, Vector)> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid("threshold", "must be nonnegative"));
    }
    let (p, q) = (cross.nrows(), cross.ncols());
    if p != x.ncols() || q != y.ncols() {
        return Err(Error::DimensionMismatch {
            what: "cross-product matrix",
            expected: x.ncols(),
            found: p,
        });
    }
    let thresholded = cross.map(|v| soft_threshold(v, threshold));
    let rows: Vec<usize> = (0..p).filter(|&i| thresholded.row(i).iter().any(|v| *v != 0.0)).collect();
    let cols: Vec<usize> = (0..q).filter(|&j| thresholded.column(j).iter().any(|v| *v != 0.0)).collect();

    let mut best: Option<(f64, Vector, Vector)> = None;
    if !rows.is_empty() {
        // The SVD of the thresholded matrix lives on its nonzero rows and
        // columns; zero rows only pad the singular vectors with zeros.
        let sub = Matrix::from_fn(rows.len(), cols.len(), |a, b| thresholded[(rows[a], cols[b])]);
        let svd = SVD::new(sub, true, true);
        let (su, svt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        for k in 0..svd.singular_values.len() {
            if svd.singular_values[k] <= 0.0 {
                continue;
            }
            let mut u = Vector::zeros(p);
            for (a, &i) in rows.iter().enumerate() {
                u[i] = su[(a, k)];
            }
            let mut v = Vector::zeros(q);
            for (b, &j) in cols.iter().enumerate() {
                v[j] = svt[(k, b)];
            }
            let (xu, yv) = (x * &u, y * &v);
            let (nx, ny) = (xu.norm(), yv.norm());
            if nx <= NULL_TOL || ny <= NULL_TOL {
                continue;
            }
            let d = xu.dot(&yv) / (nx * ny);
            if best.as_ref().is_none_or(|(b, _, _)| d > *b) {
                best = Some((d, u / nx, v / ny));
            }
        }
    }
    Ok(match best {
        Some((_, u, v)) => (u, v),
        None => {
            let (u, v, _) = leading_singular_pair(cross, 1000, 0);
            (u, v)
        }
    })
}

fn check_blocks(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            what: "rows of Y",
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    Ok(())
}

fn check_init(data: &Dataset, init: &(Vector, Vector)) -> Result<()> {
    for (what, len, expected) in [("u0", init.0.len(), data.p()), ("v0", init.1.len(), data.q())] {
        if len != expected {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found: len,
            });
        }
    }
    Ok(())
}

fn warm_state<A: LinearOperator>(op: &A, u: &Vector) -> AdmmState {
    let mut z = op.apply(u.as_slice());
    project_constraint(z.as_mut_slice(), op.ball_rows());
    let rows = op.rows();
    AdmmState {
        u: u.clone(),
        z,
        xi: Vector::zeros(rows),
        iter: 0,
        primal_residual: 0.0,
        dual_residual: 0.0,
        converged: false,
    }
}

/// Solver pair bound to fixed operators. Spectral norms are estimated once,
/// so a sweep over penalties reuses them.
pub struct Alternation<A, B> {
    u_solver: AdmmSolver<A>,
    v_solver: AdmmSolver<B>,
    cfg: SolverConfig,
}

impl<A: LinearOperator, B: LinearOperator> Alternation<A, B> {
    pub fn new(op_u: A, op_v: B, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let mut cfg_v = cfg.clone();
        cfg_v.seed = cfg.seed.wrapping_add(1);
        Ok(Self {
            u_solver: AdmmSolver::new(op_u, cfg),
            v_solver: AdmmSolver::new(op_v, &cfg_v),
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Runs the alternation at penalties `(tau_u, tau_v)` from `(u0, v0)`.
    /// Returns the raw (unsigned, unpolished) solution.
    pub fn run(
        &self,
        x: &Matrix,
        y: &Matrix,
        tau_u: f64,
        tau_v: f64,
        init: &(Vector, Vector),
    ) -> Result<CcaSolution> {
        self.run_capped(x, y, tau_u, tau_v, init, self.cfg.outer_max_iter)
    }

    /// A few loosely solved outer iterations from each start; returns the
    /// iterate with the lowest objective (a zero solution counts as 0), ties
    /// going to the earlier start. A single start is returned untouched.
    fn screen(
        &self,
        x: &Matrix,
        y: &Matrix,
        tau_u: f64,
        tau_v: f64,
        mut starts: Vec<(Vector, Vector)>,
    ) -> Result<(Vector, Vector)>
    where
        A: Clone,
        B: Clone,
    {
        if starts.len() == 1 {
            return Ok(starts.swap_remove(0));
        }
        let tol = self.cfg.inner_tol.max(SCREEN_INNER_TOL);
        let max_iter = self.cfg.inner_max_iter.min(SCREEN_INNER_MAX_ITER);
        let loose = Alternation {
            u_solver: self.u_solver.with_stopping(tol, max_iter),
            v_solver: self.v_solver.with_stopping(tol, max_iter),
            cfg: self.cfg.clone(),
        };
        let mut best: Option<(f64, (Vector, Vector))> = None;
        for start in starts {
            let s = loose.run_capped(x, y, tau_u, tau_v, &start, SCREEN_OUTER_ITERS)?;
            let obj = s.objective_history.last().copied().unwrap_or(0.0);
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, if s.zero_solution { start } else { (s.u_hat, s.v_hat) }));
            }
        }
        Ok(best.ok_or_else(|| Error::invalid("init", "no starting point"))?.1)
    }

    fn run_capped(
        &self,
        x: &Matrix,
        y: &Matrix,
        tau_u: f64,
        tau_v: f64,
        init: &(Vector, Vector),
        outer_max_iter: usize,
    ) -> Result<CcaSolution> {
        let mut su = warm_state(self.u_solver.operator(), &init.0);
        let mut sv = warm_state(self.v_solver.operator(), &init.1);
        let mut history = Vec::new();
        let mut inner_iters = 0;
        let mut converged = false;
        let mut zero = false;
        let mut outer = 0;
        while outer < outer_max_iter {
            outer += 1;
            let c_u = x.tr_mul(&(y * &sv.u));
            su = self.u_solver.solve(c_u.as_slice(), tau_u, Some(su))?;
            inner_iters += su.iter;
            if is_zero(su.u.as_slice()) {
                zero = true;
                break;
            }
            let c_v = y.tr_mul(&(x * &su.u));
            sv = self.v_solver.solve(c_v.as_slice(), tau_v, Some(sv))?;
            inner_iters += sv.iter;
            if is_zero(sv.u.as_slice()) {
                zero = true;
                break;
            }
            let obj = objective(x, y, su.u.as_slice(), sv.u.as_slice(), tau_u, tau_v);
            let done = history.last().is_some_and(|prev: &f64| {
                (obj - prev).abs() <= self.cfg.outer_tol * prev.abs().max(f64::MIN_POSITIVE)
            });
            history.push(obj);
            if done {
                converged = true;
                break;
            }
        }
        if zero {
            history.push(0.0);
            return Ok(CcaSolution {
                u_hat: Vector::zeros(x.ncols()),
                v_hat: Vector::zeros(y.ncols()),
                sample_corr: 0.0,
                l1_u: 0.0,
                l1_v: 0.0,
                converged: true,
                zero_solution: true,
                outer_iters: outer,
                inner_iters,
                objective_history: history,
                primal_residual: su.primal_residual.max(sv.primal_residual),
                dual_residual: su.dual_residual.max(sv.dual_residual),
            });
        }
        Ok(CcaSolution {
            l1_u: norm1(su.u.as_slice()),
            l1_v: norm1(sv.u.as_slice()),
            sample_corr: 0.0,
            converged,
            zero_solution: false,
            outer_iters: outer,
            inner_iters,
            objective_history: history,
            primal_residual: su.primal_residual.max(sv.primal_residual),
            dual_residual: su.dual_residual.max(sv.dual_residual),
            u_hat: su.u,
            v_hat: sv.u,
        })
    }
}

/// Rescales `u` into the ball `|A_ball u| <= 1`. The ADMM iterate is only
/// feasible up to its primal tolerance.
fn rescale_into_ball<A: LinearOperator>(op: &A, u: &mut Vector) {
    let au = op.apply(u.as_slice());
    let nrm = norm2(&au.as_slice()[..op.ball_rows()]);
    if nrm > 1.0 {
        *u /= nrm;
    }
}

fn finish<A: LinearOperator, B: LinearOperator>(
    x: &Matrix,
    y: &Matrix,
    op_u: &A,
    op_v: &B,
    mut sol: CcaSolution,
) -> Result<CcaSolution> {
    if sol.zero_solution {
        return Ok(sol);
    }
    rescale_into_ball(op_u, &mut sol.u_hat);
    rescale_into_ball(op_v, &mut sol.v_hat);
    let (u, v) = fix_sign(sol.u_hat, sol.v_hat);
    sol.l1_u = norm1(u.as_slice());
    sol.l1_v = norm1(v.as_slice());
    sol.sample_corr = sample_correlation(x, y, u.as_slice(), v.as_slice())?;
    sol.u_hat = u;
    sol.v_hat = v;
    Ok(sol)
}

fn resolve_starts(data: &Dataset, init: Option<(Vector, Vector)>) -> Result<Vec<(Vector, Vector)>> {
    match init {
        Some(i) => {
            check_init(data, &i)?;
            Ok(vec![i])
        }
        None => threshold_starts(data.x(), data.y(), &data.x().tr_mul(data.y()), FIRST_PAIR_STARTS),
    }
}

/// Leading sparse canonical pair. Without `init` the alternation is screened
/// from several thresholded-SVD starts and the lowest objective is run to
/// convergence.
pub fn solve_first_pair(
    data: &Dataset,
    cfg: &SolverConfig,
    init: Option<(Vector, Vector)>,
) -> Result<CcaSolution> {
    cfg.validate()?;
    let (x, y) = (data.x(), data.y());
    let op_u = Bridge::new(x, cfg.alpha_x)?;
    let op_v = Bridge::new(y, cfg.alpha_y)?;
    let starts = resolve_starts(data, init)?;
    let alt = Alternation::new(op_u, op_v, cfg)?;
    let init = alt.screen(x, y, cfg.tau_u, cfg.tau_v, starts)?;
    let sol = alt.run(x, y, cfg.tau_u, cfg.tau_v, &init)?;
    finish(x, y, &op_u, &op_v, sol)
}

/// Solutions along a list of `(tau_u, tau_v)` pairs, returned in input order.
/// Pairs are solved from the most to the least penalized, each starting from
/// the previous nonzero solution screened against the fresh starts of
/// [`solve_first_pair`].
pub fn solve_path(
    data: &Dataset,
    cfg: &SolverConfig,
    taus: &[(f64, f64)],
    init: Option<(Vector, Vector)>,
) -> Result<Vec<CcaSolution>> {
    cfg.validate()?;
    let (x, y) = (data.x(), data.y());
    let op_u = Bridge::new(x, cfg.alpha_x)?;
    let op_v = Bridge::new(y, cfg.alpha_y)?;
    let starts = resolve_starts(data, init)?;
    let alt = Alternation::new(op_u, op_v, cfg)?;

    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| {
        let (ta, tb) = (taus[a], taus[b]);
        (tb.0 + tb.1).total_cmp(&(ta.0 + ta.1)).then(a.cmp(&b))
    });
    let mut out: Vec<Option<CcaSolution>> = (0..taus.len()).map(|_| None).collect();
    let mut warm: Option<(Vector, Vector)> = None;
    for i in order {
        let (tau_u, tau_v) = taus[i];
        if !(tau_u >= 0.0 && tau_v >= 0.0 && tau_u.is_finite() && tau_v.is_finite()) {
            return Err(Error::invalid("tau", "penalties must be finite and nonnegative"));
        }
        // the warm start competes with the fresh ones, so a spurious pair
        // found near the zero threshold is not carried down the path
        let mut candidates = Vec::with_capacity(starts.len() + 1);
        candidates.extend(warm.take());
        candidates.extend(starts.iter().cloned());
        let start = alt.screen(x, y, tau_u, tau_v, candidates)?;
        let raw = alt.run(x, y, tau_u, tau_v, &start)?;
        if !raw.zero_solution {
            warm = Some((raw.u_hat.clone(), raw.v_hat.clone()));
        }
        out[i] = Some(finish(x, y, &op_u, &op_v, raw)?);
    }
    Ok(out.into_iter().map(|s| s.expect("every index solved")).collect())
}

/// `M = (A U)' A`, whose kernel is the set of `u` orthogonal to the columns
/// of `U` in the inner product induced by `A'A`.
fn deflation_rows<A: LinearOperator>(op: &A, prev: &Matrix) -> Matrix {
    let mut m = Matrix::zeros(prev.ncols(), op.cols());
    for (k, col) in prev.column_iter().enumerate() {
        let a_col = op.apply(col.as_slice());
        let row = op.apply_transpose(a_col.as_slice());
        m.row_mut(k).copy_from(&row.transpose());
    }
    m
}

/// Projects `u` onto `{M u = 0}` without leaving its support, then rescales
/// into the ball. Removes the residual constraint violation left by the
/// inner tolerance.
fn polish<A: LinearOperator>(op: &Augmented<A>, u: &mut Vector) {
    let m = op.constraint();
    let support: Vec<usize> = (0..u.len()).filter(|&i| u[i] != 0.0).collect();
    if !support.is_empty() && m.nrows() > 0 {
        let ms = Matrix::from_fn(m.nrows(), support.len(), |r, j| m[(r, support[j])]);
        let resid = m * &*u;
        let gram = &ms * ms.transpose();
        let eps = 1e-12 * gram.amax().max(f64::MIN_POSITIVE);
        if let Ok(pinv) = gram.pseudo_inverse(eps) {
            let coef = ms.transpose() * (pinv * resid);
            for (j, &i) in support.iter().enumerate() {
                u[i] -= coef[j];
            }
        }
    }
    rescale_into_ball(op, u);
}

/// Cross-product with the estimated contribution of earlier pairs removed:
/// `X'Y - sum_k d_k (X'X u_k)(Y'Y v_k)'` with `d_k = u_k'X'Y v_k`.
fn deflated_cross(x: &Matrix, y: &Matrix, ctx: &DeflationContext) -> Matrix {
    let mut cross = x.tr_mul(y);
    for (u, v) in ctx.u_prev.column_iter().zip(ctx.v_prev.column_iter()) {
        let (xu, yv) = (x * u, y * v);
        let d = xu.dot(&yv);
        let (gu, gv) = (x.tr_mul(&xu), y.tr_mul(&yv));
        cross.ger(-d, &gu, &gv, 1.0);
    }
    cross
}

/// The `r`-th pair under `U' A'A u = 0` and `V' B'B v = 0`. Without `init`
/// the alternation is screened from several thresholded-SVD starts on the
/// deflated cross-product and the lowest objective is run to convergence.
pub fn solve_rth_pair(
    data: &Dataset,
    ctx: &DeflationContext,
    cfg: &SolverConfig,
    init: Option<(Vector, Vector)>,
) -> Result<CcaSolution> {
    cfg.validate()?;
    ctx.validate(data)?;
    let (x, y) = (data.x(), data.y());
    let bu = Bridge::new(x, cfg.alpha_x)?;
    let bv = Bridge::new(y, cfg.alpha_y)?;
    let op_u = Augmented::new(bu, deflation_rows(&bu, &ctx.u_prev))?;
    let op_v = Augmented::new(bv, deflation_rows(&bv, &ctx.v_prev))?;
    let starts = match init {
        Some(i) => {
            check_init(data, &i)?;
            vec![i]
        }
        None => threshold_starts(x, y, &deflated_cross(x, y, ctx), DEFLATED_STARTS)?,
    };
    let alt = Alternation::new(op_u.clone(), op_v.clone(), cfg)?;
    let start = alt.screen(x, y, cfg.tau_u, cfg.tau_v, starts)?;
    let mut sol = alt.run(x, y, cfg.tau_u, cfg.tau_v, &start)?;
    if !sol.zero_solution {
        polish(&op_u, &mut sol.u_hat);
        polish(&op_v, &mut sol.v_hat);
    }
    finish(x, y, &op_u, &op_v, sol)
}

/// Keep-count grids for [`threshold_starts`]: first pairs are started at
/// every tau of a path, deflated pairs carry a weaker signal and get a
/// denser grid.
const FIRST_PAIR_STARTS: (f64, RangeInclusive<i32>) = (4.0, -2..=2);
const DEFLATED_STARTS: (f64, RangeInclusive<i32>) = (2.0, -5..=4);

/// Outer iterations spent on each start before a multi-start commits to one.
const SCREEN_OUTER_ITERS: usize = 3;
/// Inner stopping rule while screening; only the ranking of starts matters.
const SCREEN_INNER_TOL: f64 = 1e-4;
const SCREEN_INNER_MAX_ITER: usize = 200;

/// Thresholded-SVD starts at keep counts `(p + q) r^j` for `j` in `exps`,
/// and on the unthresholded matrix, without duplicates. The `j = 0` start is
/// the default one. With `n` close to `p` a single threshold can hand the
/// alternation a spurious high-correlation pair, and weaker deflated pairs
/// may not survive it at all.
fn threshold_starts(
    x: &Matrix,
    y: &Matrix,
    cross: &Matrix,
    (r, exps): (f64, RangeInclusive<i32>),
) -> Result<Vec<(Vector, Vector)>> {
    let base = (x.ncols() + y.ncols()) as f64;
    let total = cross.nrows() * cross.ncols();
    let mut thresholds: Vec<f64> = exps
        .map(|j| (base * r.powi(j)).round() as usize)
        .filter(|&k| k >= 1 && k < total)
        .map(|k| top_k_threshold(cross, k))
        .collect();
    thresholds.push(0.0);
    let mut starts: Vec<(Vector, Vector)> = Vec::with_capacity(thresholds.len());
    for th in thresholds {
        let s = initialize_from(x, y, cross, th)?;
        if !starts.contains(&s) {
            starts.push(s);
        }
    }
    Ok(starts)
}
