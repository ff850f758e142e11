//! Brute-force reference for the convex block
//!
//!     minimize  -c'u + tau |u|_1   s.t.  u'Gu <= 1,  M u = 0
//!
//! by enumeration of all sign patterns. For a fixed pattern s the problem is
//! a linear objective over an ellipsoid cut by a subspace, whose maximizer
//! has a closed form; a candidate counts only if its signs agree with s.
//! Feasible for p <= 8 or so (3^p patterns).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub struct OracleSolution {
    pub objective: f64,
    pub u: DVector<f64>,
}

fn null_basis(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return DMatrix::identity(dim, dim);
    }
    // Eigenvectors of the projector onto ker(M) with eigenvalue 1.
    let mmt = m * m.transpose();
    let pinv = mmt.clone().pseudo_inverse(1e-12 * mmt.amax().max(1e-300)).unwrap();
    let proj = DMatrix::identity(dim, dim) - m.transpose() * pinv * m;
    let eig = SymmetricEigen::new(proj);
    let cols: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    DMatrix::from_fn(dim, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])])
}

pub fn solve(gram: &DMatrix<f64>, c: &[f64], tau: f64, m: Option<&DMatrix<f64>>) -> OracleSolution {
    let p = c.len();
    let mut best = OracleSolution {
        objective: 0.0,
        u: DVector::zeros(p),
    };
    let patterns = 3usize.pow(p as u32);
    for code in 1..patterns {
        let mut signs = vec![0.0; p];
        let mut k = code;
        for s in signs.iter_mut() {
            *s = [0.0, 1.0, -1.0][k % 3];
            k /= 3;
        }
        let support: Vec<usize> = (0..p).filter(|&i| signs[i] != 0.0).collect();
        let ns = support.len();
        let g = DVector::from_fn(ns, |a, _| c[support[a]] - tau * signs[support[a]]);
        let gss = DMatrix::from_fn(ns, ns, |a, b| gram[(support[a], support[b])]);
        let ms = match m {
            Some(m) => DMatrix::from_fn(m.nrows(), ns, |r, a| m[(r, support[a])]),
            None => DMatrix::zeros(0, ns),
        };
        let n = null_basis(&ms, ns);
        if n.ncols() == 0 {
            continue;
        }
        let h = n.transpose() * &g;
        let hh = n.transpose() * &gss * &n;
        let Some(chol) = hh.cholesky() else { continue };
        let w = chol.solve(&h);
        let quad = h.dot(&w);
        if !(quad > 0.0) {
            continue;
        }
        let us = &n * (w / quad.sqrt());
        if (0..ns).any(|a| us[a] * signs[support[a]] <= 0.0) {
            continue;
        }
        let objective = -quad.sqrt();
        if objective < best.objective {
            let mut u = DVector::zeros(p);
            for (a, &i) in support.iter().enumerate() {
                u[i] = us[a];
            }
            best = OracleSolution { objective, u };
        }
    }
    best
}
