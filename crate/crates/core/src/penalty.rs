//! Penalties on the unique variances and their scaling regimes.
//!
//! Both families have the form
//!
//! ```text
//! P(theta) = -(rho n / 2) * sum_j A_jj / psi_j
//! ```
//!
//! with `A_jj = lambda_j^T lambda_j` ([`PenaltyFamily::LoadingTrace`]) or
//! `A_jj = S_jj` ([`PenaltyFamily::SampleVariance`]). The CLI also accepts the
//! aliases `akaike` (loading trace) and `hirose` (sample variance); the
//! literature is not consistent about which name belongs to which form.

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{assemble_sigma, log_likelihood, FactorParams, GradientVector, SampleMoments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyFamily {
    None,
    LoadingTrace,
    SampleVariance,
}

impl PenaltyFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            PenaltyFamily::None => "none",
            PenaltyFamily::LoadingTrace => "loading-trace",
            PenaltyFamily::SampleVariance => "sample-variance",
        }
    }
}

/// How the penalty multiplier `rho` depends on the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rho", rename_all = "kebab-case")]
pub enum Scaling {
    /// Fixed `rho`; the penalty grows like `n`.
    Vanilla(f64),
    /// `rho = 2 sqrt(2) n^{-3/2}`; the penalty shrinks like `n^{-1/2}`.
    Soft,
    Custom(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub family: PenaltyFamily,
    pub scaling: Scaling,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, scaling: Scaling) -> Result<Self> {
        match scaling {
            Scaling::Vanilla(rho) | Scaling::Custom(rho) if !(rho.is_finite() && rho > 0.0) => Err(
                Error::InvalidArgument(format!("rho must be positive, got {rho}")),
            ),
            _ => Ok(Self { family, scaling }),
        }
    }

    /// Plain maximum likelihood.
    pub fn none() -> Self {
        Self {
            family: PenaltyFamily::None,
            scaling: Scaling::Soft,
        }
    }

    pub fn soft(family: PenaltyFamily) -> Self {
        Self {
            family,
            scaling: Scaling::Soft,
        }
    }

    pub fn vanilla(family: PenaltyFamily, rho: f64) -> Result<Self> {
        Self::new(family, Scaling::Vanilla(rho))
    }

    pub fn is_none(&self) -> bool {
        self.family == PenaltyFamily::None
    }

    /// Short label such as `loading-trace[soft]` or `none`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.family, self.scaling) {
            (PenaltyFamily::None, _) => write!(f, "none"),
            (family, Scaling::Soft) => write!(f, "{}[soft]", family.as_str()),
            (family, Scaling::Vanilla(rho)) => write!(f, "{}[vanilla:{rho}]", family.as_str()),
            (family, Scaling::Custom(rho)) => write!(f, "{}[custom:{rho}]", family.as_str()),
        }
    }
}

/// Multiplier `rho` in force for sample size `n`.
pub fn effective_rho(spec: &PenaltySpec, n: usize) -> f64 {
    if spec.is_none() {
        return 0.0;
    }
    match spec.scaling {
        Scaling::Vanilla(rho) | Scaling::Custom(rho) => rho,
        Scaling::Soft => {
            let n = n as f64;
            2.0 * SQRT_2 / (n * n.sqrt())
        }
    }
}

fn check(params: &FactorParams, moments: &SampleMoments) -> Result<()> {
    if params.p() != moments.p() {
        return Err(Error::Dimension(format!(
            "parameters have p={} but moments have p={}",
            params.p(),
            moments.p()
        )));
    }
    if let Some((index, &value)) = params
        .uniquenesses()
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || **v <= 0.0)
    {
        return Err(Error::NonPositiveUniqueness { index, value });
    }
    Ok(())
}

fn numerators(spec: &PenaltySpec, params: &FactorParams, moments: &SampleMoments) -> DVector<f64> {
    match spec.family {
        PenaltyFamily::None => DVector::zeros(params.p()),
        PenaltyFamily::LoadingTrace => DVector::from_iterator(
            params.p(),
            params.loadings().row_iter().map(|r| r.norm_squared()),
        ),
        PenaltyFamily::SampleVariance => moments.cov().diagonal(),
    }
}

/// `-(rho n / 2) sum_j A_jj / psi_j`; never positive.
pub fn penalty_value(
    spec: &PenaltySpec,
    params: &FactorParams,
    moments: &SampleMoments,
) -> Result<f64> {
    check(params, moments)?;
    if spec.is_none() {
        return Ok(0.0);
    }
    let weight = 0.5 * effective_rho(spec, moments.n()) * moments.n() as f64;
    let a = numerators(spec, params, moments);
    let sum: f64 = a
        .iter()
        .zip(params.uniquenesses().iter())
        .map(|(a, psi)| a / psi)
        .sum();
    Ok(-weight * sum)
}

pub fn penalty_gradient(
    spec: &PenaltySpec,
    params: &FactorParams,
    moments: &SampleMoments,
) -> Result<GradientVector> {
    check(params, moments)?;
    let (p, q) = (params.p(), params.q());
    if spec.is_none() {
        return Ok(GradientVector::zeros(p, q));
    }
    let rho_n = effective_rho(spec, moments.n()) * moments.n() as f64;
    let psi = params.uniquenesses();
    let a = numerators(spec, params, moments);
    let d_uniquenesses =
        DVector::from_iterator(p, (0..p).map(|j| 0.5 * rho_n * a[j] / (psi[j] * psi[j])));
    let d_loadings = match spec.family {
        PenaltyFamily::LoadingTrace => {
            DMatrix::from_fn(p, q, |j, k| -rho_n * params.loadings()[(j, k)] / psi[j])
        }
        _ => DMatrix::zeros(p, q),
    };
    Ok(GradientVector {
        d_loadings,
        d_uniquenesses,
    })
}

/// `l(theta; S) + P(theta)`.
pub fn penalised_log_likelihood(
    spec: &PenaltySpec,
    params: &FactorParams,
    moments: &SampleMoments,
) -> Result<f64> {
    Ok(log_likelihood(params, moments)? + penalty_value(spec, params, moments)?)
}

/// Settings for [`verify_existence_conditions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub p: usize,
    pub q: usize,
    /// Sample size attached to the synthetic moments.
    pub n: usize,
    pub grid_points: usize,
    /// Number of boundary sequences tried for the divergence probe.
    pub divergence_sequences: usize,
    /// Sequences run `psi_j = 10^{-r}` for `r = 1..=divergence_steps`.
    pub divergence_steps: u32,
    /// The divergence probe only admits sequences along which the smallest
    /// eigenvalue of Sigma stays at or above this value.
    pub min_sigma_eigenvalue: f64,
    pub divergence_floor: f64,
    pub perturbation: f64,
    pub continuity_tolerance: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            p: 6,
            q: 2,
            n: 1,
            grid_points: 50,
            divergence_sequences: 10,
            divergence_steps: 12,
            min_sigma_eigenvalue: 0.1,
            divergence_floor: -1e6,
            perturbation: 1e-8,
            continuity_tolerance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionOutcome {
    pub passed: bool,
    pub detail: String,
}

/// Pass/fail for continuity (E1), boundedness (E2) and divergence at the
/// boundary (E3).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub penalty: PenaltySpec,
    pub continuity: ConditionOutcome,
    pub boundedness: ConditionOutcome,
    pub divergence: ConditionOutcome,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.continuity.passed && self.boundedness.passed && self.divergence.passed
    }
}

fn random_interior_point(rng: &mut ChaCha8Rng, p: usize, q: usize) -> FactorParams {
    let loadings = DMatrix::from_fn(p, q, |_, _| rng.random_range(-1.0..1.0));
    let psi = DVector::from_fn(p, |_, _| rng.random_range(0.5..2.0));
    FactorParams::new(loadings, psi).expect("interior point")
}

fn random_moments(rng: &mut ChaCha8Rng, p: usize, n: usize) -> Result<SampleMoments> {
    let b = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    let cov = &b * b.transpose() / p as f64 + DMatrix::identity(p, p) * 0.5;
    SampleMoments::from_covariance((&cov + cov.transpose()) * 0.5, n)
}

/// Numeric probes of the three existence conditions on a seeded random
/// set of interior points.
pub fn verify_existence_conditions(
    spec: &PenaltySpec,
    probe: &ProbeConfig,
) -> Result<ConditionReport> {
    let (p, q) = (probe.p, probe.q);
    if q == 0 || q >= p {
        return Err(Error::InvalidFactorCount { p, q });
    }
    if probe.n == 0 || probe.grid_points == 0 || probe.divergence_sequences == 0 {
        return Err(Error::InvalidArgument(
            "probe sizes must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    let moments = random_moments(&mut rng, p, probe.n)?;
    let grid: Vec<FactorParams> = (0..probe.grid_points)
        .map(|_| random_interior_point(&mut rng, p, q))
        .collect();

    // E2: bounded above
    let mut max_value = f64::NEG_INFINITY;
    for point in &grid {
        max_value = max_value.max(penalty_value(spec, point, &moments)?);
    }
    let boundedness = ConditionOutcome {
        passed: max_value <= 0.0,
        detail: format!("max over {} interior points = {max_value:e}", grid.len()),
    };

    // E1: continuity under small perturbations
    let mut max_change = 0.0_f64;
    for point in &grid {
        let base = penalty_value(spec, point, &moments)?;
        let dir_l = DMatrix::<f64>::from_fn(p, q, |_, _| rng.random_range(-1.0..1.0));
        let dir_psi = DVector::<f64>::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let norm = (dir_l.norm_squared() + dir_psi.norm_squared()).sqrt();
        let scale = probe.perturbation / norm;
        let moved = FactorParams::new(
            point.loadings() + dir_l * scale,
            point.uniquenesses() + dir_psi * scale,
        )?;
        max_change = max_change.max((penalty_value(spec, &moved, &moments)? - base).abs());
    }
    let continuity = ConditionOutcome {
        passed: max_change < probe.continuity_tolerance,
        detail: format!(
            "max change {max_change:e} under perturbations of norm {:e}",
            probe.perturbation
        ),
    };

    // E3: divergence along boundary sequences with Sigma bounded away from singularity
    let mut admitted = 0;
    let mut failures = 0;
    let mut worst_final = f64::NEG_INFINITY;
    let mut attempts = 0;
    while admitted < probe.divergence_sequences && attempts < 1000 * probe.divergence_sequences {
        attempts += 1;
        let start = random_interior_point(&mut rng, p, q);
        let j = rng.random_range(0..p);
        let sequence: Vec<FactorParams> = (1..=probe.divergence_steps)
            .map(|r| {
                let mut psi = start.uniquenesses().clone();
                psi[j] = 10f64.powi(-(r as i32));
                FactorParams::new(start.loadings().clone(), psi).expect("positive psi")
            })
            .collect();
        let bounded_away = sequence.iter().all(|point| {
            assemble_sigma(point).symmetric_eigenvalues().min() >= probe.min_sigma_eigenvalue
        });
        if !bounded_away {
            continue;
        }
        admitted += 1;
        let values = sequence
            .iter()
            .map(|point| penalty_value(spec, point, &moments))
            .collect::<Result<Vec<_>>>()?;
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        let last = *values.last().expect("non-empty sequence");
        worst_final = worst_final.max(last);
        if !(decreasing && last < probe.divergence_floor) {
            failures += 1;
        }
    }
    let divergence = ConditionOutcome {
        passed: admitted == probe.divergence_sequences && failures == 0,
        detail: format!(
            "{admitted} admissible sequences, {failures} failed; largest final value {worst_final:e} (floor {:e})",
            probe.divergence_floor
        ),
    };

    Ok(ConditionReport {
        penalty: *spec,
        continuity,
        boundedness,
        divergence,
    })
}
