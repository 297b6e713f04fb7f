//! Fitting pipeline: principal-axis start, EM warm start on the penalised
//! likelihood, Newton refinement, Heywood diagnosis.
//!
//! Newton works on `(Lambda, log psi)`, which keeps every unique variance
//! positive without projection. The penalised likelihood is invariant under
//! `Lambda -> Lambda Q` for orthogonal `Q`, so its Hessian is singular along
//! the `q(q-1)/2` rotation directions at any stationary point. Those
//! directions are removed before solving for the Newton step, and the
//! normalised gradient used by the Heywood heuristic lives on the same
//! complement.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::model::{
    assemble_sigma, likelihood_terms, log_likelihood, log_likelihood_constant, score_from_inverse,
    FactorParams, SampleMoments,
};
use crate::penalty::{effective_rho, penalty_gradient, penalty_value, PenaltyFamily, PenaltySpec};

/// Central-difference step for the Hessian.
const HESSIAN_STEP: f64 = 1e-6;
const MAX_HALVINGS: u32 = 30;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum StartStrategy {
    #[default]
    PrincipalAxis,
    User(FactorParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub em_iterations: usize,
    pub newton_max_iterations: usize,
    /// Convergence when the max-abs Newton step falls below this.
    pub gradient_tolerance: f64,
    pub heywood_step_threshold: f64,
    pub heywood_psi_threshold: f64,
    pub start: StartStrategy,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            em_iterations: 100,
            newton_max_iterations: 200,
            gradient_tolerance: 1e-8,
            heywood_step_threshold: 1e-4,
            heywood_psi_threshold: 1e-4,
            start: StartStrategy::PrincipalAxis,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_tolerance", self.gradient_tolerance),
            ("heywood_step_threshold", self.heywood_step_threshold),
            ("heywood_psi_threshold", self.heywood_psi_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.newton_max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "newton_max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeywoodReason {
    ProcedureFailed,
    GradientStepLarge,
    PsiNearZero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeywoodDiagnosis {
    pub flagged: bool,
    /// Sorted, without duplicates.
    pub reasons: Vec<HeywoodReason>,
    pub min_psi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: FactorParams,
    pub loglik: f64,
    pub penalty: f64,
    pub penalized_loglik: f64,
    pub converged: bool,
    pub em_iterations: usize,
    pub newton_iterations: usize,
    pub heywood: HeywoodDiagnosis,
    /// Max-abs element of the normalised gradient `H^{-1} g` at the estimate.
    pub max_newton_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub params: FactorParams,
    pub converged: bool,
    pub iterations: usize,
    /// Max-abs Newton step at the last iterate examined.
    pub max_step: f64,
    /// Singular Hessian, stalled line search, or iteration cap.
    pub failed: bool,
}

fn check_q(p: usize, q: usize) -> Result<()> {
    if q == 0 || q >= p {
        return Err(Error::InvalidFactorCount { p, q });
    }
    Ok(())
}

/// Starting values: `psi_j = (1 - q / 2p) / (S^{-1})_jj` and loadings from the
/// top-`q` eigenpairs of `Psi^{-1/2} S Psi^{-1/2}`.
pub fn principal_axis_start(moments: &SampleMoments, q: usize) -> Result<FactorParams> {
    let p = moments.p();
    check_q(p, q)?;
    let s_inv = SpdFactor::new(moments.cov())?.inverse();
    let shrink = 1.0 - q as f64 / (2.0 * p as f64);
    let psi = DVector::from_fn(p, |j, _| shrink / s_inv[(j, j)]);
    let root = psi.map(f64::sqrt);
    let scaled = DMatrix::from_fn(p, p, |i, j| moments.cov()[(i, j)] / (root[i] * root[j]));
    let eig = SymmetricEigen::new(scaled);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(p, p, |j, k| eig.eigenvectors[(j, order[k])]);
    resolve_ties(&values, &mut vectors, q);
    let loadings = DMatrix::from_fn(p, q, |j, k| {
        let excess = (values[k] - 1.0).max(0.0);
        root[j] * vectors[(j, k)] * excess.sqrt()
    });
    FactorParams::new(loadings, psi)
}

/// Replaces eigenvectors of tied eigenvalues among the leading `q` by a
/// fixed basis of their eigenspace, so the start does not depend on the
/// arbitrary basis the eigensolver returns. The basis is the Gram-Schmidt
/// orthonormalisation of the projections of `1, (1..p), (1..p)^2, ...`.
fn resolve_ties(values: &[f64], vectors: &mut DMatrix<f64>, q: usize) {
    let p = values.len();
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tied = |a: f64, b: f64| (a - b).abs() <= 1e-10 * scale;
    let mut start = 0;
    while start < q {
        let mut end = start + 1;
        while end < p && tied(values[start], values[end]) {
            end += 1;
        }
        if end - start > 1 {
            let basis = vectors.columns(start, end - start).into_owned();
            let mut chosen: Vec<DVector<f64>> = Vec::new();
            let mut power: i32 = 0;
            while chosen.len() < end - start && (power as usize) < 2 * p {
                let w = DVector::from_fn(p, |j, _| ((j + 1) as f64).powi(power));
                power += 1;
                let mut v = &basis * (basis.transpose() * w);
                for c in &chosen {
                    v -= c * c.dot(&v);
                }
                let norm = v.norm();
                if norm > 1e-8 {
                    chosen.push(v / norm);
                }
            }
            if chosen.len() == end - start {
                for (k, c) in chosen.iter().enumerate() {
                    vectors.set_column(start + k, c);
                }
            }
        }
        start = end;
    }
}

/// One EM iteration on the penalised likelihood.
///
/// Both penalty families admit a closed-form M-step: the sample-variance
/// penalty adds `rho S_jj` to the residual variance, and the loading-trace
/// penalty adds `rho I` to the expected factor second moment (a ridge on each
/// row of the loadings).
pub fn em_step(
    params: &FactorParams,
    moments: &SampleMoments,
    spec: &PenaltySpec,
) -> Result<FactorParams> {
    if params.p() != moments.p() {
        return Err(Error::Dimension(
            "parameters and moments disagree on p".into(),
        ));
    }
    let (p, q) = (params.p(), params.q());
    let lambda = params.loadings();
    let s = moments.cov();
    let factor = SpdFactor::new(&assemble_sigma(params))?;
    // beta^T = Sigma^{-1} Lambda
    let beta_t = factor.solve(lambda);
    let s_beta_t = s * &beta_t;
    let mut ezz =
        DMatrix::identity(q, q) - beta_t.transpose() * lambda + beta_t.transpose() * &s_beta_t;
    ezz = (&ezz + ezz.transpose()) * 0.5;
    let rho = effective_rho(spec, moments.n());
    if spec.family == PenaltyFamily::LoadingTrace {
        for k in 0..q {
            ezz[(k, k)] += rho;
        }
    }
    let ezz_factor = SpdFactor::new(&ezz)?;
    let new_lambda = ezz_factor.solve(&s_beta_t.transpose()).transpose();
    let mut psi = DVector::from_fn(p, |j, _| {
        s[(j, j)] - new_lambda.row(j).dot(&s_beta_t.row(j))
    });
    if spec.family == PenaltyFamily::SampleVariance {
        for j in 0..p {
            psi[j] += rho * s[(j, j)];
        }
    }
    // The update is a Schur complement of a positive-definite matrix; the
    // floor only guards rounding in the Heywood limit.
    for j in 0..p {
        psi[j] = psi[j].max(f64::MIN_POSITIVE * 1e10);
    }
    FactorParams::new(new_lambda, psi)
}

/// Penalised log-likelihood and its gradient on the packed coordinates
/// `x = (vec_rowmajor(Lambda), log psi)`.
struct Objective<'a> {
    moments: &'a SampleMoments,
    spec: &'a PenaltySpec,
    p: usize,
    q: usize,
}

impl<'a> Objective<'a> {
    fn new(moments: &'a SampleMoments, spec: &'a PenaltySpec, q: usize) -> Self {
        Self {
            moments,
            spec,
            p: moments.p(),
            q,
        }
    }

    fn dim(&self) -> usize {
        self.p * (self.q + 1)
    }

    fn pack(&self, params: &FactorParams) -> DVector<f64> {
        let (p, q) = (self.p, self.q);
        let mut x = DVector::zeros(self.dim());
        for j in 0..p {
            for k in 0..q {
                x[j * q + k] = params.loadings()[(j, k)];
            }
            x[p * q + j] = params.uniquenesses()[j].ln();
        }
        x
    }

    fn unpack(&self, x: &DVector<f64>) -> Result<FactorParams> {
        let (p, q) = (self.p, self.q);
        let loadings = DMatrix::from_fn(p, q, |j, k| x[j * q + k]);
        let psi = DVector::from_fn(p, |j, _| x[p * q + j].exp());
        FactorParams::new(loadings, psi)
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.unpack(x)
            .and_then(|params| {
                Ok(log_likelihood(&params, self.moments)?
                    + penalty_value(self.spec, &params, self.moments)?)
            })
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let params = self.unpack(x)?;
        let terms = likelihood_terms(&params, self.moments)?;
        let g = score_from_inverse(&params, self.moments, &terms.sigma_inv)
            + penalty_gradient(self.spec, &params, self.moments)?;
        let (p, q) = (self.p, self.q);
        let mut out = DVector::zeros(self.dim());
        for j in 0..p {
            for k in 0..q {
                out[j * q + k] = g.d_loadings[(j, k)];
            }
            out[p * q + j] = g.d_uniquenesses[j] * params.uniquenesses()[j];
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Central differences of the analytic gradient, symmetrised.
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = self.dim();
        let mut h = DMatrix::zeros(m, m);
        let mut probe = x.clone();
        for i in 0..m {
            let xi = x[i];
            probe[i] = xi + HESSIAN_STEP;
            let up = self.gradient(&probe)?;
            probe[i] = xi - HESSIAN_STEP;
            let down = self.gradient(&probe)?;
            probe[i] = xi;
            let column = (up - down) / (2.0 * HESSIAN_STEP);
            h.set_column(i, &column);
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    /// Orthonormal basis of the rotation directions `Lambda A`, `A` skew.
    fn rotation_basis(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let (p, q) = (self.p, self.q);
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for a in 0..q {
            for b in (a + 1)..q {
                let mut v = DVector::zeros(self.dim());
                for j in 0..p {
                    v[j * q + b] = x[j * q + a];
                    v[j * q + a] = -x[j * q + b];
                }
                let scale = v.norm();
                for u in &basis {
                    let c = u.dot(&v);
                    v.axpy(-c, u, 1.0);
                }
                let norm = v.norm();
                if norm > 1e-10 * scale.max(1e-300) && norm > 1e-14 {
                    basis.push(v / norm);
                }
            }
        }
        basis
    }

    /// Gradient and Hessian with the rotation directions split off: returns
    /// `(P g, P H P - s U U^T)`, `P = I - U U^T`.
    fn reduced_system(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let g = self.gradient(x)?;
        let h = self.hessian(x)?;
        let basis = self.rotation_basis(x);
        if basis.is_empty() {
            return Ok((g, h));
        }
        let m = self.dim();
        let mut proj = DMatrix::identity(m, m);
        let mut uut = DMatrix::zeros(m, m);
        for u in &basis {
            let outer = u * u.transpose();
            proj -= &outer;
            uut += outer;
        }
        let scale = (h.diagonal().iter().map(|v| v.abs()).sum::<f64>() / m as f64).max(1.0);
        let reduced = &proj * h * &proj - uut * scale;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        Ok((&proj * g, reduced))
    }
}

/// Newton direction for maximisation: `-H^{-1} g` when the reduced Hessian
/// is negative definite, otherwise the step with every eigenvalue of `-H`
/// replaced by its absolute value.
fn ascent_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let neg = -h;
    if let Ok(factor) = SpdFactor::new(&neg) {
        let d = factor.solve_vec(g);
        if d.iter().all(|v| v.is_finite()) {
            return Some(d);
        }
    }
    let eig = SymmetricEigen::new(neg);
    let largest = eig.eigenvalues.amax();
    if !(largest.is_finite() && largest > 0.0) {
        return None;
    }
    let floor = largest * 1e-8;
    let coeffs = eig.eigenvectors.transpose() * g;
    let scaled = DVector::from_fn(coeffs.len(), |i, _| {
        coeffs[i] / eig.eigenvalues[i].abs().max(floor)
    });
    let d = &eig.eigenvectors * scaled;
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// `H^{-1} g` on the complement of the rotation directions, or `None` when
/// the Hessian is numerically singular.
fn normalized_gradient(objective: &Objective<'_>, x: &DVector<f64>) -> Option<DVector<f64>> {
    let (g, h) = objective.reduced_system(x).ok()?;
    let step = h.lu().solve(&g)?;
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// Newton-Raphson with step halving on `(Lambda, log psi)`.
pub fn newton_refine(
    params: &FactorParams,
    moments: &SampleMoments,
    spec: &PenaltySpec,
    opts: &FitOptions,
) -> Result<NewtonOutcome> {
    opts.validate()?;
    if params.p() != moments.p() {
        return Err(Error::Dimension(
            "parameters and moments disagree on p".into(),
        ));
    }
    let objective = Objective::new(moments, spec, params.q());
    let mut x = objective.pack(params);
    let mut value = objective.value(&x);
    if !value.is_finite() {
        return Ok(NewtonOutcome {
            params: params.clone(),
            converged: false,
            iterations: 0,
            max_step: f64::INFINITY,
            failed: true,
        });
    }
    let mut converged = false;
    let mut failed = false;
    let mut iterations = 0;
    let mut max_step = f64::INFINITY;

    loop {
        let Ok((g, h)) = objective.reduced_system(&x) else {
            failed = true;
            break;
        };
        let Some(d) = ascent_direction(&g, &h) else {
            failed = true;
            break;
        };
        max_step = d.amax();
        if max_step < opts.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.newton_max_iterations {
            failed = true;
            break;
        }
        let slack = 32.0 * f64::EPSILON * value.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &x + &d * t;
            let v = objective.value(&candidate);
            if v.is_finite() && v >= value - slack {
                accepted = Some((candidate, v));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((candidate, v)) => {
                x = candidate;
                value = value.max(v);
            }
            None => {
                failed = true;
                break;
            }
        }
    }

    Ok(NewtonOutcome {
        params: objective.unpack(&x)?,
        converged,
        iterations,
        max_step,
        failed,
    })
}

/// Flags a fit when the procedure failed, the normalised gradient has an
/// element above `heywood_step_threshold`, or some `psi_j` is below
/// `heywood_psi_threshold`.
pub fn heywood_diagnose(
    procedure_failed: bool,
    max_newton_step: f64,
    min_psi: f64,
    opts: &FitOptions,
) -> HeywoodDiagnosis {
    let mut reasons = Vec::new();
    if procedure_failed {
        reasons.push(HeywoodReason::ProcedureFailed);
    }
    if max_newton_step.is_nan() || max_newton_step > opts.heywood_step_threshold {
        reasons.push(HeywoodReason::GradientStepLarge);
    }
    if min_psi.is_nan() || min_psi < opts.heywood_psi_threshold {
        reasons.push(HeywoodReason::PsiNearZero);
    }
    HeywoodDiagnosis {
        flagged: !reasons.is_empty(),
        reasons,
        min_psi,
    }
}

/// Start, `em_iterations` EM steps, Newton refinement, diagnosis.
pub fn fit(
    moments: &SampleMoments,
    q: usize,
    spec: &PenaltySpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    check_q(moments.p(), q)?;
    let start = match &opts.start {
        StartStrategy::PrincipalAxis => principal_axis_start(moments, q)?,
        StartStrategy::User(params) => {
            if params.p() != moments.p() || params.q() != q {
                return Err(Error::Dimension(format!(
                    "starting values are {}x{}, expected {}x{q}",
                    params.p(),
                    params.q(),
                    moments.p()
                )));
            }
            params.clone()
        }
    };

    let mut params = start;
    let mut em_done = 0;
    let mut em_failed = false;
    for _ in 0..opts.em_iterations {
        match em_step(&params, moments, spec) {
            Ok(next) => {
                params = next;
                em_done += 1;
            }
            Err(_) => {
                em_failed = true;
                break;
            }
        }
    }

    let newton = newton_refine(&params, moments, spec, opts)?;
    let params = newton.params;
    let objective = Objective::new(moments, spec, q);
    let x = objective.pack(&params);
    let (max_newton_step, singular) = match normalized_gradient(&objective, &x) {
        Some(step) => (step.amax(), false),
        None => (f64::INFINITY, true),
    };

    let loglik = log_likelihood(&params, moments).unwrap_or(f64::NEG_INFINITY);
    let penalty = penalty_value(spec, &params, moments).unwrap_or(f64::NEG_INFINITY);
    let procedure_failed =
        em_failed || newton.failed || singular || !loglik.is_finite() || !penalty.is_finite();
    let heywood = heywood_diagnose(
        procedure_failed,
        max_newton_step,
        params.min_uniqueness(),
        opts,
    );

    Ok(FitResult {
        loglik,
        penalty,
        penalized_loglik: loglik + penalty,
        converged: newton.converged,
        em_iterations: em_done,
        newton_iterations: newton.iterations,
        heywood,
        max_newton_step,
        params,
    })
}

/// `C - n p / 2`: the log-likelihood when the model reproduces `S` exactly.
pub fn saturated_log_likelihood(moments: &SampleMoments) -> f64 {
    log_likelihood_constant(moments.n(), moments.p())
        - 0.5 * (moments.n() * moments.p()) as f64
        - 0.5
            * moments.n() as f64
            * SpdFactor::new(moments.cov())
                .map(|f| f.log_det())
                .unwrap_or(f64::NAN)
}
