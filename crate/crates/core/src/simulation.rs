//! Scenario generators: structured covariance families, the rank-1 canonical
//! model `Sigma_xy = rho Sigma_x u v' Sigma_y`, and joint Gaussian sampling.

use crate::linalg::{gaussian_matrix, rng, SeededRng};
use crate::{Dataset, Error, Matrix, Result, Vector};
use alloc::format;
use alloc::vec::Vec;
use nalgebra::Cholesky;
#[allow(unused_imports)] // inherent f64 methods shadow it whenever std is linked
use num_traits::Float;
use rand::seq::index::sample as sample_indices;
use rand::Rng;

/// Covariance family shared by `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Family {
    Identity,
    /// Entries `base^|i-j|`.
    Toeplitz { base: f64 },
    /// Correlation-normalized inverse of a banded precision matrix.
    SparseInverse,
    /// `lambda W W' + I` with `W` a random `k`-frame.
    Spiked { k: usize, lambda: f64 },
    /// `blocks` equal Toeplitz blocks on the diagonal.
    BlockToeplitz { blocks: usize, base: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioSpec {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub s_u: usize,
    pub s_v: usize,
    pub rho: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 || self.n < 2 {
            return Err(Error::invalid("n/p/q", "need n >= 2 and p, q >= 1"));
        }
        if self.s_u == 0 || self.s_v == 0 || self.s_u > self.p || self.s_v > self.q {
            return Err(Error::invalid("s_u/s_v", "sparsity must lie in 1..=dimension"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", "must lie in [0, 1)"));
        }
        match self.family {
            Family::Toeplitz { base } | Family::BlockToeplitz { base, .. }
                if !(0.0..1.0).contains(&base) =>
            {
                Err(Error::invalid("base", "must lie in [0, 1)"))
            }
            Family::BlockToeplitz { blocks, .. }
                if blocks == 0 || self.p % blocks != 0 || self.q % blocks != 0 =>
            {
                Err(Error::invalid(
                    "blocks",
                    format!("{blocks} blocks must divide p = {} and q = {}", self.p, self.q),
                ))
            }
            Family::BlockToeplitz { .. }
                if fixed_support(self.s_u).last().copied().unwrap_or(0) >= self.p
                    || fixed_support(self.s_v).last().copied().unwrap_or(0) >= self.q =>
            {
                Err(Error::invalid("s_u/s_v", "stride-5 support does not fit"))
            }
            Family::Spiked { k, lambda } if k > self.p || k > self.q || !(lambda >= 0.0) => {
                Err(Error::invalid("k/lambda", "need k <= p, q and lambda >= 0"))
            }
            _ => Ok(()),
        }
    }
}

/// A true canonical pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TruePair {
    pub u: Vector,
    pub v: Vector,
    pub rho: f64,
}

/// Population model: covariance blocks plus the true canonical vectors,
/// normalized so that `u' Sigma_x u = v' Sigma_y v = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    pub u_true: Vector,
    pub v_true: Vector,
    pub sigma_x: Matrix,
    pub sigma_y: Matrix,
    pub sigma_xy: Matrix,
    pub rho: f64,
    /// Further pairs when the cross-covariance has rank above one.
    pub higher: Vec<TruePair>,
}

impl TruthSpec {
    pub fn p(&self) -> usize {
        self.sigma_x.nrows()
    }

    pub fn q(&self) -> usize {
        self.sigma_y.nrows()
    }

    pub fn joint_covariance(&self) -> Matrix {
        let (p, q) = (self.p(), self.q());
        let mut j = Matrix::zeros(p + q, p + q);
        j.view_mut((0, 0), (p, p)).copy_from(&self.sigma_x);
        j.view_mut((p, p), (q, q)).copy_from(&self.sigma_y);
        j.view_mut((0, p), (p, q)).copy_from(&self.sigma_xy);
        j.view_mut((p, 0), (q, p)).copy_from(&self.sigma_xy.transpose());
        j
    }

    /// All pairs, leading pair first.
    pub fn pairs(&self) -> Vec<TruePair> {
        let mut out = Vec::with_capacity(1 + self.higher.len());
        out.push(TruePair {
            u: self.u_true.clone(),
            v: self.v_true.clone(),
            rho: self.rho,
        });
        out.extend(self.higher.iter().cloned());
        out
    }
}

/// Entries `base^|i-j|`.
pub fn toeplitz_cov(p: usize, base: f64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&base) {
        return Err(Error::invalid("base", "must lie in [0, 1)"));
    }
    Ok(Matrix::from_fn(p, p, |i, j| base.powi(i.abs_diff(j) as i32)))
}

/// Banded precision `omega_ij = 1{i=j} + 0.5 1{|i-j|=1} + 0.4 1{|i-j|=2}`.
pub fn sparse_inverse_precision(p: usize) -> Matrix {
    Matrix::from_fn(p, p, |i, j| match i.abs_diff(j) {
        0 => 1.0,
        1 => 0.5,
        2 => 0.4,
        _ => 0.0,
    })
}

/// `Sigma0 = Omega^{-1}` rescaled to unit diagonal.
pub fn sparse_inverse_cov(p: usize) -> Result<Matrix> {
    if p < 3 {
        return Err(Error::invalid("p", "the banded precision needs p >= 3"));
    }
    let chol = Cholesky::new(sparse_inverse_precision(p)).ok_or(Error::NotPositiveDefinite)?;
    let sigma0 = chol.inverse();
    let d: Vec<f64> = (0..p).map(|i| sigma0[(i, i)].sqrt()).collect();
    Ok(Matrix::from_fn(p, p, |i, j| sigma0[(i, j)] / (d[i] * d[j])))
}

/// Orthonormal `p x k` frame from the QR factor of a seeded Gaussian matrix.
pub fn random_orthonormal(p: usize, k: usize, rng: &mut SeededRng) -> Matrix {
    let g = gaussian_matrix(p, k, rng);
    let qr = g.qr();
    let mut q = qr.q();
    // Fix column signs so the frame is a deterministic function of the draw.
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `lam W W' + I` together with the frame `W`.
pub fn spiked_cov(p: usize, k: usize, lam: f64, seed: u64) -> Result<(Matrix, Matrix)> {
    if k > p {
        return Err(Error::invalid("k", "spike rank exceeds dimension"));
    }
    if !(lam >= 0.0) {
        return Err(Error::invalid("lambda", "must be nonnegative"));
    }
    let w = random_orthonormal(p, k, &mut rng(seed));
    let mut sigma = &w * w.transpose() * lam;
    for i in 0..p {
        sigma[(i, i)] += 1.0;
    }
    Ok((sigma, w))
}

/// Block-diagonal matrix of `blocks` Toeplitz blocks of size `p / blocks`.
pub fn block_toeplitz_cov(p: usize, blocks: usize, base: f64) -> Result<Matrix> {
    if blocks == 0 || p % blocks != 0 {
        return Err(Error::invalid(
            "blocks",
            format!("{blocks} blocks do not divide p = {p}"),
        ));
    }
    let size = p / blocks;
    let block = toeplitz_cov(size, base)?;
    let mut m = Matrix::zeros(p, p);
    for b in 0..blocks {
        m.view_mut((b * size, b * size), (size, size)).copy_from(&block);
    }
    Ok(m)
}

/// Independent child seed for `stream`, so draws for different purposes never
/// share an RNG sequence.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Covariance of one block (`stream` separates the x and y spike frames).
pub fn family_covariance(family: Family, dim: usize, seed: u64, stream: u64) -> Result<Matrix> {
    match family {
        Family::Identity => Ok(Matrix::identity(dim, dim)),
        Family::Toeplitz { base } => toeplitz_cov(dim, base),
        Family::SparseInverse => sparse_inverse_cov(dim),
        Family::Spiked { k, lambda } => Ok(spiked_cov(dim, k, lambda, derive_seed(seed, stream))?.0),
        Family::BlockToeplitz { blocks, base } => block_toeplitz_cov(dim, blocks, base),
    }
}

/// Indices 0, 5, 10, ... (the 1-based pattern 1, 6, 11, ...).
fn fixed_support(s: usize) -> Vec<usize> {
    (0..s).map(|j| 5 * j).collect()
}

fn sigma_norm(sigma: &Matrix, u: &Vector) -> f64 {
    u.dot(&(sigma * u)).sqrt()
}

/// Draws `count` sparse sign vectors with pairwise disjoint supports of size
/// `s`, then makes them orthonormal in the `sigma` inner product.
fn sparse_directions(
    dim: usize,
    s: usize,
    count: usize,
    sigma: &Matrix,
    fixed: bool,
    rng: &mut SeededRng,
) -> Result<Vec<Vector>> {
    if s * count > dim {
        return Err(Error::invalid("s", "supports do not fit in the dimension"));
    }
    let mut out: Vec<Vector> = Vec::with_capacity(count);
    if fixed {
        let mut u = Vector::zeros(dim);
        for i in fixed_support(s) {
            u[i] = 1.0 / (s as f64).sqrt();
        }
        out.push(u);
    } else {
        let mut idx = sample_indices(rng, dim, s * count).into_vec();
        for chunk in idx.chunks_mut(s) {
            chunk.sort_unstable();
            let mut u = Vector::zeros(dim);
            for &i in chunk.iter() {
                u[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
            out.push(u);
        }
    }
    for k in 0..out.len() {
        for j in 0..k {
            let proj = out[j].dot(&(sigma * &out[k]));
            let prev = out[j].clone();
            out[k].axpy(-proj, &prev, 1.0);
        }
        let nrm = sigma_norm(sigma, &out[k]);
        if !(nrm > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        out[k] /= nrm;
    }
    Ok(out)
}

/// Checks `lambda_min(sigma) > 1e-10` via a shifted Cholesky factorization.
fn check_pd(sigma: &Matrix) -> Result<()> {
    let mut shifted = sigma.clone();
    for i in 0..sigma.nrows() {
        shifted[(i, i)] -= 1e-10;
    }
    Cholesky::new(shifted)
        .map(|_| ())
        .ok_or(Error::NotPositiveDefinite)
}

/// Rank-1 model of the scenario.
pub fn make_truth(spec: &ScenarioSpec) -> Result<TruthSpec> {
    make_truth_with(spec, &[spec.rho])
}

/// Model with one canonical pair per entry of `rhos` (descending, in
/// `[0, 1)`), with disjoint supports of sizes `s_u`, `s_v`.
pub fn make_truth_with(spec: &ScenarioSpec, rhos: &[f64]) -> Result<TruthSpec> {
    spec.validate()?;
    if rhos.is_empty() || rhos.iter().any(|r| !(0.0..1.0).contains(r)) {
        return Err(Error::invalid("rho", "correlations must lie in [0, 1)"));
    }
    if rhos.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("rho", "correlations must be sorted descending"));
    }
    let sigma_x = family_covariance(spec.family, spec.p, spec.seed, 1)?;
    let sigma_y = family_covariance(spec.family, spec.q, spec.seed, 2)?;
    check_pd(&sigma_x)?;
    check_pd(&sigma_y)?;

    let fixed = matches!(spec.family, Family::BlockToeplitz { .. });
    if fixed && rhos.len() > 1 {
        return Err(Error::invalid("rho", "the fixed block pattern has a single pair"));
    }
    let mut r = rng(derive_seed(spec.seed, 3));
    let us = sparse_directions(spec.p, spec.s_u, rhos.len(), &sigma_x, fixed, &mut r)?;
    let vs = sparse_directions(spec.q, spec.s_v, rhos.len(), &sigma_y, fixed, &mut r)?;

    // Sigma_xy = Sigma_x (sum_k rho_k u_k v_k') Sigma_y
    let mut core = Matrix::zeros(spec.p, spec.q);
    for ((u, v), rho) in us.iter().zip(&vs).zip(rhos) {
        core.ger(*rho, u, v, 1.0);
    }
    let sigma_xy = &sigma_x * core * &sigma_y;

    let mut pairs = us.into_iter().zip(vs).zip(rhos.iter().copied());
    let ((u_true, v_true), rho) = pairs.next().expect("at least one pair");
    let higher = pairs
        .map(|((u, v), rho)| TruePair { u, v, rho })
        .collect();
    Ok(TruthSpec {
        u_true,
        v_true,
        sigma_x,
        sigma_y,
        sigma_xy,
        rho,
        higher,
    })
}

/// Cholesky factor of the joint covariance, reusable across draws.
#[derive(Debug, Clone)]
pub struct JointSampler {
    factor: Matrix,
    p: usize,
}

impl JointSampler {
    pub fn new(truth: &TruthSpec) -> Result<Self> {
        let chol = Cholesky::new(truth.joint_covariance()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            factor: chol.unpack(),
            p: truth.p(),
        })
    }

    /// `n` independent rows of `N(0, Sigma)`, split into `(X, Y)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let d = self.factor.nrows();
        let z = gaussian_matrix(n, d, &mut rng(seed));
        let draws = z * self.factor.transpose();
        let x = draws.columns(0, self.p).into_owned();
        let y = draws.columns(self.p, d - self.p).into_owned();
        Dataset::from_raw(x, y)
    }
}

pub fn sample_joint(truth: &TruthSpec, n: usize, seed: u64) -> Result<Dataset> {
    JointSampler::new(truth)?.sample(n, seed)
}

fn check_orthonormal(m: &Matrix) -> Result<()> {
    let k = m.ncols();
    let g = m.tr_mul(m);
    if (g - Matrix::identity(k, k)).amax() > 1e-8 {
        return Err(Error::NotOrthonormal);
    }
    Ok(())
}

/// `[[I, U diag(lambda) V'], [V diag(lambda) U', I]]` for orthonormal `U`,
/// `V`. Its eigenvalues are `1 +- lambda_i` and `1`.
pub fn special_case_sigma(u: &Matrix, v: &Matrix, lambda: &[f64]) -> Result<Matrix> {
    let k = lambda.len();
    if u.ncols() != k || v.ncols() != k {
        return Err(Error::DimensionMismatch {
            what: "spectral factors",
            expected: k,
            found: u.ncols().min(v.ncols()),
        });
    }
    if lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::invalid("lambda", "diagonal entries must lie in [0, 1]"));
    }
    check_orthonormal(u)?;
    check_orthonormal(v)?;
    let (p, q) = (u.nrows(), v.nrows());
    let cross = u * Matrix::from_diagonal(&Vector::from_column_slice(lambda)) * v.transpose();
    let mut s = Matrix::identity(p + q, p + q);
    s.view_mut((0, p), (p, q)).copy_from(&cross);
    s.view_mut((p, 0), (q, p)).copy_from(&cross.transpose());
    Ok(s)
}

/// The `2k` closed-form eigenvectors `(U_i; V_i)/sqrt(2)` followed by
/// `(U_i; -V_i)/sqrt(2)`.
pub fn special_case_eigenvectors(u: &Matrix, v: &Matrix) -> Matrix {
    let (p, q, k) = (u.nrows(), v.nrows(), u.ncols());
    let h = 1.0 / 2.0_f64.sqrt();
    let mut w = Matrix::zeros(p + q, 2 * k);
    for i in 0..k {
        w.view_mut((0, i), (p, 1)).copy_from(&(u.column(i) * h));
        w.view_mut((p, i), (q, 1)).copy_from(&(v.column(i) * h));
        w.view_mut((0, k + i), (p, 1)).copy_from(&(u.column(i) * h));
        w.view_mut((p, k + i), (q, 1)).copy_from(&(v.column(i) * -h));
    }
    w
}
