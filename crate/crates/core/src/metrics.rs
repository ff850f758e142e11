//! Evaluation quantities: chordal loss, correlations, support recovery and
//! Pareto-frontier geometry.

use crate::linalg::{dot, norm1, norm2};
use crate::simulation::TruthSpec;
use crate::solver::CcaSolution;
use crate::{Error, Matrix, Result, Vector};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it whenever std is linked
use num_traits::Float;

fn unit(v: &[f64]) -> Result<Vector> {
    let n = norm2(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(Vector::from_iterator(v.len(), v.iter().map(|x| x / n)))
}

fn check_len(what: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what,
            expected: b.len(),
            found: a.len(),
        });
    }
    Ok(())
}

/// `2 (1 - |<v_hat, v>|)` after normalizing both vectors to unit length.
pub fn loss(v_hat: &[f64], v: &[f64]) -> Result<f64> {
    check_len("loss", v_hat, v)?;
    let a = unit(v_hat)?;
    let b = unit(v)?;
    let c = a.dot(&b).abs().min(1.0);
    Ok(2.0 * (1.0 - c))
}

/// `min(|v_hat - v|^2, |v_hat + v|^2)` on the normalized vectors; equal to
/// [`loss`] up to rounding.
pub fn loss_min_form(v_hat: &[f64], v: &[f64]) -> Result<f64> {
    check_len("loss", v_hat, v)?;
    let a = unit(v_hat)?;
    let b = unit(v)?;
    Ok((&a - &b).norm_squared().min((&a + &b).norm_squared()))
}

/// `u'X'Yv / (sqrt(u'X'Xu) sqrt(v'Y'Yv))`.
pub fn sample_correlation(x: &Matrix, y: &Matrix, u: &[f64], v: &[f64]) -> Result<f64> {
    for (what, len, expected) in [("u", u.len(), x.ncols()), ("v", v.len(), y.ncols())] {
        if len != expected {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found: len,
            });
        }
    }
    let xu = x * Vector::from_column_slice(u);
    let yv = y * Vector::from_column_slice(v);
    let den = xu.norm() * yv.norm();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((xu.dot(&yv) / den).clamp(-1.0, 1.0))
}

/// The same ratio with population covariances.
pub fn population_correlation(truth: &TruthSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != truth.sigma_x.ncols() || v.len() != truth.sigma_y.ncols() {
        return Err(Error::DimensionMismatch {
            what: "population correlation",
            expected: truth.sigma_x.ncols(),
            found: u.len(),
        });
    }
    let u = Vector::from_column_slice(u);
    let v = Vector::from_column_slice(v);
    let num = u.dot(&(&truth.sigma_xy * &v));
    let den = u.dot(&(&truth.sigma_x * &u)).max(0.0).sqrt() * v.dot(&(&truth.sigma_y * &v)).max(0.0).sqrt();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Coordinates of one solution in the correlation / sparsity plane.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoPoint {
    pub l1_sum: f64,
    /// `None` for a degenerate (zero) solution.
    pub sample_corr: Option<f64>,
    pub population_corr: Option<f64>,
}

impl ParetoPoint {
    pub fn is_degenerate(&self) -> bool {
        self.sample_corr.is_none()
    }
}

pub fn pareto_point(solution: &CcaSolution, truth: Option<&TruthSpec>) -> ParetoPoint {
    let l1_sum = solution.l1_u + solution.l1_v;
    if solution.zero_solution {
        return ParetoPoint {
            l1_sum,
            sample_corr: None,
            population_corr: None,
        };
    }
    let population_corr = truth.and_then(|t| {
        population_correlation(t, solution.u_hat.as_slice(), solution.v_hat.as_slice()).ok()
    });
    ParetoPoint {
        l1_sum,
        sample_corr: Some(solution.sample_corr),
        population_corr,
    }
}

/// The point of the true canonical pair, `(rho, |u|_1 + |v|_1)`.
pub fn true_point(truth: &TruthSpec) -> (f64, f64) {
    (
        truth.rho,
        norm1(truth.u_true.as_slice()) + norm1(truth.v_true.as_slice()),
    )
}

/// F1 score of the estimated support (entries with `|.| > tol`) against the
/// true support.
pub fn support_f1(u_hat: &[f64], u_true: &[f64], tol: f64) -> Result<f64> {
    check_len("support", u_hat, u_true)?;
    let truth: Vec<bool> = u_true.iter().map(|v| v.abs() > tol).collect();
    let n_true = truth.iter().filter(|b| **b).count();
    if n_true == 0 {
        return Err(Error::EmptySupport);
    }
    let est: Vec<bool> = u_hat.iter().map(|v| v.abs() > tol).collect();
    let n_est = est.iter().filter(|b| **b).count();
    let hits = est.iter().zip(&truth).filter(|(a, b)| **a && **b).count();
    if hits == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * hits as f64 / (n_est + n_true) as f64)
}

/// Points not dominated by any other, where larger correlation and smaller
/// l1 are better. Input is `(corr, l1)`; output is sorted by l1.
pub fn nondominated(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(c, l)| c.is_finite() && l.is_finite())
        .collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for p in sorted {
        if p.0 > best {
            best = p.0;
            out.push(p);
        }
    }
    out
}

/// Axis ranges used to put correlation and l1 on a common `[0, 1]` scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBounds {
    pub corr: (f64, f64),
    pub l1: (f64, f64),
}

impl AxisBounds {
    /// Bounding box of all given points.
    pub fn covering<'a>(points: impl IntoIterator<Item = &'a (f64, f64)>) -> Self {
        let mut b = AxisBounds {
            corr: (f64::INFINITY, f64::NEG_INFINITY),
            l1: (f64::INFINITY, f64::NEG_INFINITY),
        };
        for (c, l) in points {
            b.corr = (b.corr.0.min(*c), b.corr.1.max(*c));
            b.l1 = (b.l1.0.min(*l), b.l1.1.max(*l));
        }
        b
    }

    pub fn normalize(&self, p: (f64, f64)) -> (f64, f64) {
        let scale = |v: f64, (lo, hi): (f64, f64)| {
            if hi > lo {
                (v - lo) / (hi - lo)
            } else {
                0.0
            }
        };
        (scale(p.0, self.corr), scale(p.1, self.l1))
    }
}

/// Euclidean distance from `target` to the polyline through `frontier`
/// (in the order given), after normalizing both axes with `bounds`.
pub fn frontier_distance(frontier: &[(f64, f64)], target: (f64, f64), bounds: &AxisBounds) -> f64 {
    let t = bounds.normalize(target);
    let pts: Vec<(f64, f64)> = frontier.iter().map(|p| bounds.normalize(*p)).collect();
    match pts.len() {
        0 => f64::INFINITY,
        1 => ((pts[0].0 - t.0).powi(2) + (pts[0].1 - t.1).powi(2)).sqrt(),
        _ => pts
            .windows(2)
            .map(|w| segment_distance(w[0], w[1], t))
            .fold(f64::INFINITY, f64::min),
    }
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let d = (b.0 - a.0, b.1 - a.1);
    let len2 = d.0 * d.0 + d.1 * d.1;
    let s = if len2 > 0.0 {
        (((p.0 - a.0) * d.0 + (p.1 - a.1) * d.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = (a.0 + s * d.0, a.1 + s * d.1);
    ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
}

/// Sum of the two l1 norms, the sparsity axis of a Pareto plot.
pub fn l1_sum(u: &[f64], v: &[f64]) -> f64 {
    norm1(u) + norm1(v)
}

/// Inner product `u' X' X w`, used to audit deflation orthogonality.
pub fn gram_inner(x: &Matrix, u: &[f64], w: &[f64]) -> f64 {
    let xu = x * Vector::from_column_slice(u);
    let xw = x * Vector::from_column_slice(w);
    dot(xu.as_slice(), xw.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn loss_examples() {
        let v = [0.6, 0.8];
        assert_eq!(loss(&v, &v).unwrap(), 0.0);
        assert_eq!(loss(&[-0.6, -0.8], &v).unwrap(), 0.0);
        // <v_hat, v> = 0.8
        let l = loss(&[1.0, 0.0], &[0.8, 0.6]).unwrap();
        assert!((l - 0.4).abs() < 1e-15);
        assert_eq!(loss(&[0.0, 0.0], &v), Err(Error::ZeroVector));
    }

    #[test]
    fn sample_correlation_examples() {
        let x = Matrix::from_row_slice(3, 1, &[1.0, -1.0, 0.0]);
        let y = Matrix::from_row_slice(3, 1, &[2.0, -2.0, 0.0]);
        assert!((sample_correlation(&x, &y, &[1.0], &[1.0]).unwrap() - 1.0).abs() < 1e-15);
        let y = Matrix::from_row_slice(3, 1, &[1.0, 1.0, -2.0]);
        assert!(sample_correlation(&x, &y, &[1.0], &[1.0]).unwrap().abs() < 1e-15);
        let z = Matrix::zeros(3, 1);
        assert_eq!(
            sample_correlation(&x, &z, &[1.0], &[1.0]),
            Err(Error::ZeroDenominator)
        );
    }

    #[test]
    fn f1_examples() {
        let t = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(support_f1(&t, &t, 1e-6).unwrap(), 1.0);
        let d = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        assert_eq!(support_f1(&d, &t, 1e-6).unwrap(), 0.0);
        let extra = [1.0, 1.0, 1.0, 1.0, 1.0, 0.3, 0.0];
        assert!((support_f1(&extra, &t, 1e-6).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        assert_eq!(support_f1(&t, &[0.0; 7], 1e-6), Err(Error::EmptySupport));
    }

    #[test]
    fn frontier_helpers() {
        let pts = vec![(0.5, 1.0), (0.4, 2.0), (0.9, 3.0), (0.8, 4.0)];
        assert_eq!(nondominated(&pts), vec![(0.5, 1.0), (0.9, 3.0)]);
        let b = AxisBounds {
            corr: (0.0, 1.0),
            l1: (0.0, 10.0),
        };
        let d = frontier_distance(&[(0.0, 0.0), (1.0, 10.0)], (0.5, 5.0), &b);
        assert!(d < 1e-15);
        let d = frontier_distance(&[(0.0, 0.0)], (1.0, 0.0), &b);
        assert!((d - 1.0).abs() < 1e-15);
    }
}
