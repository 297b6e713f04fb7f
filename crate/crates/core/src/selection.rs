//! AIC/BIC for fitted factor models and choice of the number of factors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{fit, FitOptions, FitResult};
use crate::model::SampleMoments;
use crate::penalty::PenaltySpec;

/// Free parameters of a q-factor model on p variables, means excluded:
/// `p(q + 1) - q(q - 1)/2` (loadings and unique variances, less the
/// rotational indeterminacy).
pub fn free_parameter_count(p: usize, q: usize) -> usize {
    p * (q + 1) - q * q.saturating_sub(1) / 2
}

/// `(aic, bic)` with `aic = -2 l + 2k` and `bic = -2 l + k log n`.
pub fn information_criteria(loglik: f64, p: usize, q: usize, n: usize) -> (f64, f64) {
    let k = free_parameter_count(p, q) as f64;
    (-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * (n as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionRow {
    pub q: usize,
    /// Unpenalised log-likelihood at the (possibly penalised) estimate;
    /// `-inf` when the fit could not be attempted.
    pub loglik: f64,
    pub k_free_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub heywood_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    /// Ascending in `q`.
    pub per_q: Vec<SelectionRow>,
    pub best_aic: usize,
    pub best_bic: usize,
    #[serde(skip)]
    pub fits: Vec<Option<FitResult>>,
}

impl SelectionResult {
    pub fn row(&self, q: usize) -> Option<&SelectionRow> {
        self.per_q.iter().find(|r| r.q == q)
    }
}

fn argmin_q(rows: &[SelectionRow], key: impl Fn(&SelectionRow) -> f64) -> Option<usize> {
    // rows ascend in q, so strict comparison keeps the smaller q on ties
    let mut best: Option<(usize, f64)> = None;
    for row in rows {
        let v = key(row);
        if !v.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((row.q, v));
        }
    }
    best.map(|(q, _)| q)
}

/// Builds a [`SelectionResult`] from already computed fits, one per `q`.
pub fn selection_from_fits(
    p: usize,
    n: usize,
    fits: Vec<(usize, Option<FitResult>)>,
) -> Result<SelectionResult> {
    let mut fits = fits;
    fits.sort_by_key(|(q, _)| *q);
    fits.dedup_by_key(|(q, _)| *q);
    let per_q: Vec<SelectionRow> = fits
        .iter()
        .map(|(q, f)| {
            let loglik = f
                .as_ref()
                .map(|f| f.loglik)
                .filter(|l| l.is_finite())
                .unwrap_or(f64::NEG_INFINITY);
            let (aic, bic) = information_criteria(loglik, p, *q, n);
            SelectionRow {
                q: *q,
                loglik,
                k_free_params: free_parameter_count(p, *q),
                aic,
                bic,
                heywood_flagged: f.as_ref().is_none_or(|f| f.heywood.flagged),
            }
        })
        .collect();
    let best_aic = argmin_q(&per_q, |r| r.aic)
        .ok_or_else(|| Error::InvalidArgument("no q in the grid could be fitted".into()))?;
    let best_bic = argmin_q(&per_q, |r| r.bic).expect("finite aic implies finite bic");
    Ok(SelectionResult {
        per_q,
        best_aic,
        best_bic,
        fits: fits.into_iter().map(|(_, f)| f).collect(),
    })
}

/// Fits every `q` in the grid (Heywood-flagged fits included) and picks the
/// AIC and BIC minimisers, ties going to the smaller `q`.
pub fn select_q(
    moments: &SampleMoments,
    q_grid: &[usize],
    spec: &PenaltySpec,
    opts: &FitOptions,
) -> Result<SelectionResult> {
    if q_grid.is_empty() {
        return Err(Error::InvalidArgument("empty q grid".into()));
    }
    let mut grid = q_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let fits = grid
        .into_iter()
        .map(|q| (q, fit(moments, q, spec, opts).ok()))
        .collect();
    selection_from_fits(moments.p(), moments.n(), fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn parameter_counts() {
        assert_eq!(free_parameter_count(9, 1), 18);
        assert_eq!(free_parameter_count(9, 2), 26);
        assert_eq!(free_parameter_count(10, 1), 20);
        assert_eq!(free_parameter_count(9, 5), 44);
    }

    #[test]
    fn criteria_arithmetic() {
        let (aic, bic) = information_criteria(-100.0, 6, 1, 50);
        assert_eq!(aic, 224.0);
        assert!((bic - (200.0 + 12.0 * 50f64.ln())).abs() < 1e-12);
        assert!((bic - 246.94).abs() < 0.005);
    }

    #[test]
    fn identity_selects_one_factor() {
        let m = SampleMoments::from_covariance(DMatrix::identity(6, 6), 200).unwrap();
        let r = select_q(&m, &[2, 1], &PenaltySpec::none(), &FitOptions::default()).unwrap();
        assert_eq!(r.per_q.iter().map(|r| r.q).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(r.best_aic, 1);
        assert_eq!(r.best_bic, 1);
    }

    #[test]
    fn empty_grid_and_unfittable_grid() {
        let m = SampleMoments::from_covariance(DMatrix::identity(3, 3), 20).unwrap();
        assert!(select_q(&m, &[], &PenaltySpec::none(), &FitOptions::default()).is_err());
        assert!(select_q(&m, &[3, 4], &PenaltySpec::none(), &FitOptions::default()).is_err());
        let r = select_q(&m, &[1, 5], &PenaltySpec::none(), &FitOptions::default()).unwrap();
        assert_eq!(r.row(5).unwrap().loglik, f64::NEG_INFINITY);
        assert_eq!(r.best_bic, 1);
    }
}
