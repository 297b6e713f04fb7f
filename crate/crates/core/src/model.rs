//! Factor-model parameterisation and the profile log-likelihood.
//!
//! With `n` observations on `p` variables the model covariance is
//! `Sigma = Lambda Lambda^T + Psi`, and after profiling out the mean the
//! log-likelihood is
//!
//! ```text
//! l(Lambda, Psi; S) = C - n/2 * [ log det Sigma + tr(Sigma^{-1} S) ],   C = -n p log(2 pi) / 2
//! ```
//!
//! where `S` is the sample covariance with divisor `n`.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, SpdFactor};

/// Loadings `Lambda` (p x q) and unique variances `psi` (length p).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorParams {
    loadings: DMatrix<f64>,
    uniquenesses: DVector<f64>,
}

impl FactorParams {
    pub fn new(loadings: DMatrix<f64>, uniquenesses: DVector<f64>) -> Result<Self> {
        let (p, q) = loadings.shape();
        if uniquenesses.len() != p {
            return Err(Error::Dimension(format!(
                "loadings have {p} rows but {} unique variances were given",
                uniquenesses.len()
            )));
        }
        if q == 0 || q >= p {
            return Err(Error::InvalidFactorCount { p, q });
        }
        if loadings.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some((index, &value)) = uniquenesses
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveUniqueness { index, value });
        }
        Ok(Self {
            loadings,
            uniquenesses,
        })
    }

    /// Builds parameters from loadings whose rows all have squared norm
    /// below one, choosing `psi_j = 1 - sum_k lambda_jk^2` so that the
    /// implied covariance has unit diagonal.
    pub fn with_unit_diagonal(loadings: DMatrix<f64>) -> Result<Self> {
        let psi = DVector::from_iterator(
            loadings.nrows(),
            loadings.row_iter().map(|r| 1.0 - r.norm_squared()),
        );
        Self::new(loadings, psi)
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn uniquenesses(&self) -> &DVector<f64> {
        &self.uniquenesses
    }

    pub fn p(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn q(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn min_uniqueness(&self) -> f64 {
        self.uniquenesses.min()
    }

    /// Same unique variances, loadings replaced by `Lambda Q`.
    pub fn rotated(&self, rotation: &DMatrix<f64>) -> Result<Self> {
        if rotation.shape() != (self.q(), self.q()) {
            return Err(Error::Dimension("rotation must be q x q".into()));
        }
        Self::new(&self.loadings * rotation, self.uniquenesses.clone())
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.loadings, self.uniquenesses)
    }
}

/// Sufficient statistics of a sample: size, mean and covariance (divisor n).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMoments {
    n: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    standardized: bool,
}

impl SampleMoments {
    /// Moments from a covariance or correlation matrix and a sample size.
    /// The mean is taken as zero; the profile likelihood does not use it.
    pub fn from_covariance(cov: DMatrix<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be positive".into(),
            ));
        }
        if !cov.is_square() || cov.nrows() == 0 {
            return Err(Error::Dimension(
                "covariance must be a non-empty square matrix".into(),
            ));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !is_symmetric(&cov, 1e-12) {
            return Err(Error::NotSymmetric);
        }
        SpdFactor::new(&cov)?;
        let standardized = cov.diagonal().iter().all(|d| (d - 1.0).abs() <= 1e-10);
        let p = cov.nrows();
        Ok(Self {
            n,
            mean: DVector::zeros(p),
            cov,
            standardized,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.cov.nrows()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn standardized(&self) -> bool {
        self.standardized
    }

    /// Correlation matrix with the same sample size.
    pub fn to_correlation(&self) -> Result<Self> {
        let sd = self.cov.diagonal().map(f64::sqrt);
        let corr = DMatrix::from_fn(self.p(), self.p(), |i, j| {
            if i == j {
                1.0
            } else {
                self.cov[(i, j)] / (sd[i] * sd[j])
            }
        });
        let mut out = Self::from_covariance(corr, self.n)?;
        out.mean = self.mean.component_div(&sd);
        Ok(out)
    }
}

/// Gradient of a scalar function of [`FactorParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub d_loadings: DMatrix<f64>,
    pub d_uniquenesses: DVector<f64>,
}

impl GradientVector {
    pub fn zeros(p: usize, q: usize) -> Self {
        Self {
            d_loadings: DMatrix::zeros(p, q),
            d_uniquenesses: DVector::zeros(p),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.d_loadings.amax().max(self.d_uniquenesses.amax())
    }
}

impl Add for GradientVector {
    type Output = GradientVector;

    fn add(self, rhs: GradientVector) -> GradientVector {
        GradientVector {
            d_loadings: self.d_loadings + rhs.d_loadings,
            d_uniquenesses: self.d_uniquenesses + rhs.d_uniquenesses,
        }
    }
}

impl Sub for GradientVector {
    type Output = GradientVector;

    fn sub(self, rhs: GradientVector) -> GradientVector {
        GradientVector {
            d_loadings: self.d_loadings - rhs.d_loadings,
            d_uniquenesses: self.d_uniquenesses - rhs.d_uniquenesses,
        }
    }
}

/// `Lambda Lambda^T + diag(psi)`.
pub fn assemble_sigma(params: &FactorParams) -> DMatrix<f64> {
    let l = params.loadings();
    let mut sigma = l * l.transpose();
    for (j, psi) in params.uniquenesses().iter().enumerate() {
        sigma[(j, j)] += psi;
    }
    sigma
}

/// Column means and covariance with divisor `n`, accumulated in one pass
/// with Welford updates.
pub fn sample_moments(data: &DMatrix<f64>) -> Result<SampleMoments> {
    let (n, p) = data.shape();
    if p == 0 {
        return Err(Error::Dimension("data has no columns".into()));
    }
    if n <= p {
        return Err(Error::TooFewObservations { n, p });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut mean = DVector::<f64>::zeros(p);
    let mut comoment = DMatrix::<f64>::zeros(p, p);
    let mut delta = DVector::<f64>::zeros(p);
    for (i, row) in data.row_iter().enumerate() {
        let count = (i + 1) as f64;
        for j in 0..p {
            delta[j] = row[j] - mean[j];
            mean[j] += delta[j] / count;
        }
        // comoment += delta_old * (x - mean_new)^T
        for a in 0..p {
            let da = delta[a];
            for b in 0..=a {
                comoment[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    let mut cov = comoment / n as f64;
    for a in 0..p {
        for b in 0..a {
            cov[(b, a)] = cov[(a, b)];
        }
    }
    SpdFactor::new(&cov)?;
    Ok(SampleMoments {
        n,
        mean,
        cov,
        standardized: false,
    })
}

fn check_dims(params: &FactorParams, moments: &SampleMoments) -> Result<()> {
    if params.p() != moments.p() {
        return Err(Error::Dimension(format!(
            "parameters have p={} but moments have p={}",
            params.p(),
            moments.p()
        )));
    }
    Ok(())
}

pub(crate) struct LikelihoodTerms {
    pub log_det: f64,
    pub trace: f64,
    pub sigma_inv: DMatrix<f64>,
}

pub(crate) fn likelihood_terms(
    params: &FactorParams,
    moments: &SampleMoments,
) -> Result<LikelihoodTerms> {
    check_dims(params, moments)?;
    let factor = SpdFactor::new(&assemble_sigma(params))?;
    let sigma_inv = factor.inverse();
    let trace = sigma_inv.component_mul(moments.cov()).sum();
    Ok(LikelihoodTerms {
        log_det: factor.log_det(),
        trace,
        sigma_inv,
    })
}

pub(crate) fn log_likelihood_constant(n: usize, p: usize) -> f64 {
    -(n as f64) * p as f64 * (2.0 * PI).ln() / 2.0
}

/// Profile log-likelihood, constant included.
pub fn log_likelihood(params: &FactorParams, moments: &SampleMoments) -> Result<f64> {
    let terms = likelihood_terms(params, moments)?;
    let n = moments.n() as f64;
    let value =
        log_likelihood_constant(moments.n(), moments.p()) - 0.5 * n * (terms.log_det + terms.trace);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite)
    }
}

/// Analytic gradient of [`log_likelihood`].
pub fn score(params: &FactorParams, moments: &SampleMoments) -> Result<GradientVector> {
    let terms = likelihood_terms(params, moments)?;
    Ok(score_from_inverse(params, moments, &terms.sigma_inv))
}

pub(crate) fn score_from_inverse(
    params: &FactorParams,
    moments: &SampleMoments,
    sigma_inv: &DMatrix<f64>,
) -> GradientVector {
    let n = moments.n() as f64;
    // Omega = Sigma^-1 - Sigma^-1 S Sigma^-1
    let omega = sigma_inv - sigma_inv * moments.cov() * sigma_inv;
    GradientVector {
        d_loadings: &omega * params.loadings() * (-n),
        d_uniquenesses: omega.diagonal() * (-0.5 * n),
    }
}

/// Maximum-likelihood discrepancy
/// `log det S2 + tr(S2^{-1} S1) - p - log det S1`.
pub fn discrepancy(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    if s1.shape() != s2.shape() || !s1.is_square() {
        return Err(Error::Dimension(
            "discrepancy needs two p x p matrices".into(),
        ));
    }
    if !is_symmetric(s1, 1e-12) || !is_symmetric(s2, 1e-12) {
        return Err(Error::NotSymmetric);
    }
    let f1 = SpdFactor::new(s1)?;
    let f2 = SpdFactor::new(s2)?;
    let trace = f2.solve(s1).trace();
    let value = f2.log_det() + trace - s1.nrows() as f64 - f1.log_det();
    Ok(value.max(0.0))
}

/// Row-wise `sum_k lambda_jk^2`.
pub fn communalities(params: &FactorParams) -> DVector<f64> {
    DVector::from_iterator(
        params.p(),
        params.loadings().row_iter().map(|r| r.norm_squared()),
    )
}

/// Upper triangle (diagonal included) of `Lambda Lambda^T`, row-major.
pub fn unique_elements(loadings: &DMatrix<f64>) -> Vec<f64> {
    let llt = loadings * loadings.transpose();
    let p = llt.nrows();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        for j in i..p {
            out.push(llt[(i, j)]);
        }
    }
    out
}
