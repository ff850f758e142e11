//! Data containers and the centering/scaling convention shared by all solvers.
//!
//! Every solver works on unit-variance-scaled data: columns are centered and
//! the matrix is divided by `sqrt(n)`, so that `|Xu|_2^2` is the biased sample
//! variance of `Xu` and the ball constraint `|Xu|_2 <= 1` reads `Var(Xu) <= 1`.

use crate::{Error, Matrix, Result};
#[allow(unused_imports)] // inherent f64 methods shadow it whenever std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ScaleMode {
    /// Centered only.
    Raw,
    /// Centered, then divided by `sqrt(n)`.
    #[default]
    UnitVarianceScale,
}

/// A pair of data matrices observed on the same `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Matrix,
    centered: bool,
    scale_mode: ScaleMode,
}

impl Dataset {
    /// Wraps `x` and `y` after validating shapes, finiteness and (if claimed)
    /// centering.
    pub fn new(x: Matrix, y: Matrix, centered: bool, scale_mode: ScaleMode) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::invalid("n", "at least two samples are required"));
        }
        if y.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "rows of Y",
                expected: n,
                found: y.nrows(),
            });
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::invalid("p/q", "both blocks need at least one column"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("data", "entries must be finite"));
        }
        if centered && !(columns_centered(&x) && columns_centered(&y)) {
            return Err(Error::invalid("centered", "a column has nonzero mean"));
        }
        Ok(Self {
            x,
            y,
            centered,
            scale_mode,
        })
    }

    /// Uncentered data as drawn or read from disk.
    pub fn from_raw(x: Matrix, y: Matrix) -> Result<Self> {
        Self::new(x, y, false, ScaleMode::Raw)
    }

    /// Centers and unit-variance-scales both blocks.
    pub fn standardize(x: &Matrix, y: &Matrix) -> Result<Self> {
        Self::new(
            center_scale(x, ScaleMode::UnitVarianceScale),
            center_scale(y, ScaleMode::UnitVarianceScale),
            true,
            ScaleMode::UnitVarianceScale,
        )
    }

    /// The solver-ready version of this dataset. Data that is already
    /// centered and scaled is returned unchanged.
    pub fn standardized(&self) -> Result<Self> {
        if self.centered && self.scale_mode == ScaleMode::UnitVarianceScale {
            return Ok(self.clone());
        }
        Self::standardize(&self.x, &self.y)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn scale_mode(&self) -> ScaleMode {
        self.scale_mode
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.x, self.y)
    }
}

fn columns_centered(m: &Matrix) -> bool {
    let n = m.nrows() as f64;
    m.column_iter().all(|col| {
        let max_abs = col.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        (col.sum() / n).abs() <= 1e-10 * max_abs.max(f64::MIN_POSITIVE)
    })
}

/// Subtracts column means and, for [`ScaleMode::UnitVarianceScale`], divides
/// by `sqrt(n)`. Constant columns become zero.
pub fn center_scale(x: &Matrix, mode: ScaleMode) -> Matrix {
    let n = x.nrows();
    let scale = match mode {
        ScaleMode::Raw => 1.0,
        ScaleMode::UnitVarianceScale => 1.0 / (n as f64).sqrt(),
    };
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n as f64;
        for v in col.iter_mut() {
            *v = (*v - mean) * scale;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_mode_subtracts_mean() {
        let x = Matrix::from_column_slice(2, 1, &[1.0, 3.0]);
        let c = center_scale(&x, ScaleMode::Raw);
        assert_eq!(c.as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn unit_variance_mode_divides_by_sqrt_n() {
        let x = Matrix::from_column_slice(2, 1, &[1.0, 3.0]);
        let c = center_scale(&x, ScaleMode::UnitVarianceScale);
        let h = 1.0 / 2.0_f64.sqrt();
        assert!((c[0] + h).abs() < 1e-15 && (c[1] - h).abs() < 1e-15);
    }

    #[test]
    fn centered_column_is_unchanged() {
        let x = Matrix::from_column_slice(2, 1, &[-2.0, 2.0]);
        assert_eq!(center_scale(&x, ScaleMode::Raw), x);
    }

    #[test]
    fn constant_column_centers_to_zero() {
        let x = Matrix::from_column_slice(3, 1, &[4.0, 4.0, 4.0]);
        assert!(center_scale(&x, ScaleMode::UnitVarianceScale).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_mismatched_rows() {
        let x = Matrix::zeros(3, 2);
        let y = Matrix::zeros(4, 2);
        assert!(matches!(
            Dataset::from_raw(x, y),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_single_sample_and_nan() {
        assert!(Dataset::from_raw(Matrix::zeros(1, 2), Matrix::zeros(1, 2)).is_err());
        let mut x = Matrix::zeros(3, 2);
        x[(1, 1)] = f64::NAN;
        assert!(Dataset::from_raw(x, Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn false_centering_claim_is_rejected() {
        let x = Matrix::from_column_slice(2, 1, &[1.0, 3.0]);
        let y = Matrix::from_column_slice(2, 1, &[-1.0, 1.0]);
        assert!(Dataset::new(x, y, true, ScaleMode::Raw).is_err());
    }
}
