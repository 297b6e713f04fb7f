use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Smallest reciprocal condition number accepted for a covariance matrix.
pub(crate) const RCOND_THRESHOLD: f64 = 1e-12;

/// Cholesky factorisation of a symmetric positive-definite matrix, with a
/// cheap reciprocal-condition estimate taken from the factor's diagonal.
pub(crate) struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub(crate) fn new(m: &DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
        let rcond = (lo / hi).powi(2);
        if rcond.is_nan() || rcond < RCOND_THRESHOLD {
            return Err(Error::IllConditioned { rcond });
        }
        Ok(Self { chol })
    }

    pub(crate) fn log_det(&self) -> f64 {
        2.0 * self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>()
    }

    pub(crate) fn inverse(&self) -> DMatrix<f64> {
        let inv = self.chol.inverse();
        symmetrize(&inv)
    }

    pub(crate) fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub(crate) fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetry to within `tol` relative to the largest absolute entry.
pub(crate) fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}
