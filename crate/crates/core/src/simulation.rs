//! Seeded Monte Carlo studies: data from fixed loading designs, replicated
//! fits per estimator, Heywood rates, bias/RMSE/underestimation of the
//! unique elements of `Lambda Lambda^T`, and AIC/BIC selection rates.
//!
//! Replicate `r` of a study with seed `s` draws from ChaCha20 stream `r`
//! keyed by `s`, so results do not depend on execution order or on how
//! replicates are spread over threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit, FitOptions, FitResult, HeywoodReason};
use crate::linalg::SpdFactor;
use crate::model::{assemble_sigma, sample_moments, unique_elements, FactorParams};
use crate::penalty::PenaltySpec;
use crate::selection::selection_from_fits;

const A3_BLOCK: [f64; 3] = [0.80, 0.65, 0.45];
const A5_BLOCK: [f64; 5] = [0.80, 0.65, 0.50, 0.35, 0.20];
const A8_BLOCK: [f64; 8] = [0.80, 0.70, 0.60, 0.50, 0.40, 0.30, 0.20, 0.10];
const B_LEVELS: [f64; 3] = [0.80, 0.80, 0.30];

/// Population loading design. Named settings have three factors, each
/// loading on its own block of items; unique variances make the implied
/// covariance a correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LoadingSetting {
    A3,
    B3,
    A5,
    B5,
    A8,
    B8,
    #[serde(rename = "custom")]
    Custom(Vec<Vec<f64>>),
}

impl LoadingSetting {
    pub fn custom(loadings: &DMatrix<f64>) -> Self {
        LoadingSetting::Custom(
            loadings
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            LoadingSetting::A3 => "A3",
            LoadingSetting::B3 => "B3",
            LoadingSetting::A5 => "A5",
            LoadingSetting::B5 => "B5",
            LoadingSetting::A8 => "A8",
            LoadingSetting::B8 => "B8",
            LoadingSetting::Custom(_) => "custom",
        }
    }

    pub fn loadings(&self) -> Result<DMatrix<f64>> {
        let block_diagonal = |columns: [Vec<f64>; 3]| {
            let items: usize = columns.iter().map(Vec::len).sum();
            let mut l = DMatrix::zeros(items, 3);
            let mut row = 0;
            for (k, col) in columns.iter().enumerate() {
                for &v in col {
                    l[(row, k)] = v;
                    row += 1;
                }
            }
            l
        };
        let a = |block: &[f64]| block_diagonal([block.to_vec(), block.to_vec(), block.to_vec()]);
        let b = |items: usize| block_diagonal(B_LEVELS.map(|v| vec![v; items]));
        Ok(match self {
            LoadingSetting::A3 => a(&A3_BLOCK),
            LoadingSetting::A5 => a(&A5_BLOCK),
            LoadingSetting::A8 => a(&A8_BLOCK),
            LoadingSetting::B3 => b(3),
            LoadingSetting::B5 => b(5),
            LoadingSetting::B8 => b(8),
            LoadingSetting::Custom(rows) => {
                let p = rows.len();
                let q = rows.first().map_or(0, Vec::len);
                if p == 0 || q == 0 || rows.iter().any(|r| r.len() != q) {
                    return Err(Error::Dimension(
                        "custom loadings must be a non-empty rectangular matrix".into(),
                    ));
                }
                DMatrix::from_fn(p, q, |j, k| rows[j][k])
            }
        })
    }

    /// Population parameters with `psi_j = 1 - sum_k lambda_jk^2`.
    pub fn params(&self) -> Result<FactorParams> {
        FactorParams::with_unit_diagonal(self.loadings()?)
    }

    pub fn q(&self) -> Result<usize> {
        Ok(self.loadings()?.ncols())
    }
}

impl fmt::Display for LoadingSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LoadingSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A3" => Ok(LoadingSetting::A3),
            "B3" => Ok(LoadingSetting::B3),
            "A5" => Ok(LoadingSetting::A5),
            "B5" => Ok(LoadingSetting::B5),
            "A8" => Ok(LoadingSetting::A8),
            "B8" => Ok(LoadingSetting::B8),
            _ => Err(Error::InvalidArgument(format!(
                "unknown loading setting '{s}'"
            ))),
        }
    }
}

/// Random stream for replicate `replicate` of a study seeded with `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// `n` draws from `N(0, Sigma)` through the Cholesky factor of `Sigma`.
pub fn sample_normal(
    params: &FactorParams,
    n: usize,
    rng: &mut ChaCha20Rng,
) -> Result<DMatrix<f64>> {
    let sigma = assemble_sigma(params);
    SpdFactor::new(&sigma)?;
    let chol = nalgebra::Cholesky::new(sigma).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let p = params.p();
    let z = DMatrix::<f64>::from_fn(p, n, |_, _| StandardNormal.sample(rng));
    Ok((l * z).transpose())
}

/// Data for replicate `replicate` of a study seeded with `seed`.
pub fn generate_data(
    setting: &LoadingSetting,
    n: usize,
    seed: u64,
    replicate: u64,
) -> Result<DMatrix<f64>> {
    let params = setting.params()?;
    let mut rng = replicate_rng(seed, replicate);
    sample_normal(&params, n, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub setting: LoadingSetting,
    pub n: usize,
    pub replicates: usize,
    pub estimators: Vec<PenaltySpec>,
    /// Number of factors for the bias/RMSE/Heywood part; defaults to the
    /// setting's own number of factors.
    pub q_fit: Option<usize>,
    /// When present, every estimator also runs AIC/BIC selection over this grid.
    pub q_grid: Option<Vec<usize>>,
    pub seed: u64,
    #[serde(skip)]
    pub fit_options: FitOptions,
}

impl SimulationConfig {
    pub fn new(setting: LoadingSetting, n: usize, replicates: usize, seed: u64) -> Self {
        Self {
            setting,
            n,
            replicates,
            estimators: vec![PenaltySpec::none()],
            q_fit: None,
            q_grid: None,
            seed,
            fit_options: FitOptions::default(),
        }
    }

    pub fn with_estimators(mut self, estimators: Vec<PenaltySpec>) -> Self {
        self.estimators = estimators;
        self
    }

    pub fn with_q_grid(mut self, grid: Vec<usize>) -> Self {
        self.q_grid = Some(grid);
        self
    }

    fn resolved_q(&self) -> Result<usize> {
        match self.q_fit {
            Some(q) => Ok(q),
            None => self.setting.q(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("no estimators given".into()));
        }
        let p = self.setting.params()?.p();
        if self.n <= p {
            return Err(Error::TooFewObservations { n: self.n, p });
        }
        let q = self.resolved_q()?;
        if q == 0 || q >= p {
            return Err(Error::InvalidFactorCount { p, q });
        }
        if let Some(grid) = &self.q_grid {
            if grid.is_empty() {
                return Err(Error::InvalidArgument("empty q grid".into()));
            }
            if let Some(&bad) = grid.iter().find(|&&g| g == 0 || g >= p) {
                return Err(Error::InvalidFactorCount { p, q: bad });
            }
        }
        self.fit_options.validate()
    }
}

/// Outcome of one estimator on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub estimator: String,
    pub flagged: bool,
    pub reasons: Vec<HeywoodReason>,
    pub min_psi: f64,
    pub loglik: f64,
    pub penalized_loglik: f64,
    pub converged: bool,
    pub max_newton_step: f64,
    pub selected_aic: Option<usize>,
    pub selected_bic: Option<usize>,
    /// Fitted parameters at `q_fit`.
    #[serde(skip)]
    pub params: Option<FactorParams>,
    /// Unique elements of the fitted `Lambda Lambda^T`.
    #[serde(skip)]
    pub elements: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTally {
    pub q_grid: Vec<usize>,
    pub aic_counts: Vec<usize>,
    pub bic_counts: Vec<usize>,
    pub aic_percent: Vec<f64>,
    pub bic_percent: Vec<f64>,
}

impl SelectionTally {
    pub fn bic_rate(&self, q: usize) -> Option<f64> {
        self.q_grid
            .iter()
            .position(|&g| g == q)
            .map(|i| self.bic_percent[i])
    }

    pub fn aic_rate(&self, q: usize) -> Option<f64> {
        self.q_grid
            .iter()
            .position(|&g| g == q)
            .map(|i| self.aic_percent[i])
    }
}

/// Bias, RMSE and probability of underestimation per unique element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementMetrics {
    pub bias: Vec<f64>,
    pub rmse: Vec<f64>,
    pub underestimation: Vec<f64>,
}

impl ElementMetrics {
    pub fn mean_abs_bias(&self) -> f64 {
        mean(self.bias.iter().map(|b| b.abs()))
    }

    pub fn mean_rmse(&self) -> f64 {
        mean(self.rmse.iter().copied())
    }

    pub fn mean_underestimation(&self) -> f64 {
        mean(self.underestimation.iter().copied())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Element-wise metrics of `estimates` against `truth`; NaN when there are
/// no estimates.
pub fn element_metrics(truth: &[f64], estimates: &[&[f64]]) -> ElementMetrics {
    let count = estimates.len() as f64;
    let mut bias = vec![0.0; truth.len()];
    let mut sq = vec![0.0; truth.len()];
    let mut under = vec![0.0; truth.len()];
    for est in estimates {
        for (e, (&t, &v)) in truth.iter().zip(est.iter()).enumerate() {
            let d = v - t;
            bias[e] += d;
            sq[e] += d * d;
            if v < t {
                under[e] += 1.0;
            }
        }
    }
    ElementMetrics {
        bias: bias.into_iter().map(|b| b / count).collect(),
        rmse: sq.into_iter().map(|s| (s / count).sqrt()).collect(),
        underestimation: under.into_iter().map(|u| u / count).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: PenaltySpec,
    pub label: String,
    pub replicates: usize,
    pub heywood_count: usize,
    pub heywood_percent: f64,
    /// Replicates entering the element metrics (non-Heywood ones).
    pub used_replicates: usize,
    pub metrics: ElementMetrics,
    pub mean_abs_bias: f64,
    pub mean_rmse: f64,
    pub mean_underestimation: f64,
    pub selection: Option<SelectionTally>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: SimulationConfig,
    pub q_fit: usize,
    /// `(i, j)` with `i <= j` for each unique element, row-major.
    pub element_index: Vec<(usize, usize)>,
    pub truth: Vec<f64>,
    pub estimators: Vec<EstimatorSummary>,
    pub outcomes: Vec<ReplicateOutcome>,
    /// Wall-clock time; kept out of the serialised report so that reruns
    /// are byte-identical.
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl StudyReport {
    pub fn summary(&self, spec: &PenaltySpec) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|s| &s.estimator == spec)
    }

    pub fn outcomes_for<'a>(
        &'a self,
        label: &'a str,
    ) -> impl Iterator<Item = &'a ReplicateOutcome> + 'a {
        self.outcomes.iter().filter(move |o| o.estimator == label)
    }

    /// Mean over replicates where neither estimator is flagged of the max-abs
    /// difference between their `Lambda Lambda^T` estimates.
    pub fn paired_max_abs_difference(&self, a: &PenaltySpec, b: &PenaltySpec) -> Option<f64> {
        let (la, lb) = (a.label(), b.label());
        let mut by_rep_b = vec![None; self.config.replicates];
        for o in self.outcomes_for(&lb) {
            by_rep_b[o.replicate] = Some(o);
        }
        let diffs: Vec<f64> = self
            .outcomes_for(&la)
            .filter_map(|oa| {
                let ob = by_rep_b[oa.replicate]?;
                if oa.flagged || ob.flagged {
                    return None;
                }
                Some(
                    oa.elements
                        .iter()
                        .zip(&ob.elements)
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0, f64::max),
                )
            })
            .collect();
        (!diffs.is_empty()).then(|| mean(diffs.into_iter()))
    }
}

fn outcome_from_fit(replicate: usize, label: &str, result: Option<&FitResult>) -> ReplicateOutcome {
    match result {
        Some(r) => ReplicateOutcome {
            replicate,
            estimator: label.to_string(),
            flagged: r.heywood.flagged,
            reasons: r.heywood.reasons.clone(),
            min_psi: r.heywood.min_psi,
            loglik: r.loglik,
            penalized_loglik: r.penalized_loglik,
            converged: r.converged,
            max_newton_step: r.max_newton_step,
            selected_aic: None,
            selected_bic: None,
            elements: unique_elements(r.params.loadings()),
            params: Some(r.params.clone()),
        },
        None => ReplicateOutcome {
            replicate,
            estimator: label.to_string(),
            flagged: true,
            reasons: vec![HeywoodReason::ProcedureFailed],
            min_psi: f64::NAN,
            loglik: f64::NEG_INFINITY,
            penalized_loglik: f64::NEG_INFINITY,
            converged: false,
            max_newton_step: f64::INFINITY,
            selected_aic: None,
            selected_bic: None,
            params: None,
            elements: Vec::new(),
        },
    }
}

fn run_replicate(
    config: &SimulationConfig,
    q_fit: usize,
    replicate: usize,
) -> Vec<ReplicateOutcome> {
    let moments = generate_data(&config.setting, config.n, config.seed, replicate as u64)
        .and_then(|data| sample_moments(&data));
    config
        .estimators
        .iter()
        .map(|spec| {
            let label = spec.label();
            let Ok(moments) = &moments else {
                return outcome_from_fit(replicate, &label, None);
            };
            let main = fit(moments, q_fit, spec, &config.fit_options).ok();
            let mut outcome = outcome_from_fit(replicate, &label, main.as_ref());
            if let Some(grid) = &config.q_grid {
                let fits = grid
                    .iter()
                    .map(|&q| {
                        let f = if q == q_fit {
                            main.clone()
                        } else {
                            fit(moments, q, spec, &config.fit_options).ok()
                        };
                        (q, f)
                    })
                    .collect();
                if let Ok(sel) = selection_from_fits(moments.p(), moments.n(), fits) {
                    outcome.selected_aic = Some(sel.best_aic);
                    outcome.selected_bic = Some(sel.best_bic);
                }
            }
            outcome
        })
        .collect()
}

fn tally(
    grid: &[usize],
    picks: impl Iterator<Item = Option<usize>> + Clone,
    total: usize,
) -> (Vec<usize>, Vec<f64>) {
    let counts: Vec<usize> = grid
        .iter()
        .map(|&q| picks.clone().filter(|&s| s == Some(q)).count())
        .collect();
    let percent = counts
        .iter()
        .map(|&c| 100.0 * c as f64 / total as f64)
        .collect();
    (counts, percent)
}

/// Summaries per estimator from replicate outcomes. Pure function of its
/// inputs, independent of the order in which replicates were computed as
/// long as `outcomes` is sorted by replicate.
pub fn summarize(
    config: &SimulationConfig,
    truth: &[f64],
    outcomes: &[ReplicateOutcome],
) -> Vec<EstimatorSummary> {
    config
        .estimators
        .iter()
        .map(|spec| {
            let label = spec.label();
            let mine: Vec<&ReplicateOutcome> =
                outcomes.iter().filter(|o| o.estimator == label).collect();
            let heywood_count = mine.iter().filter(|o| o.flagged).count();
            let used: Vec<&[f64]> = mine
                .iter()
                .filter(|o| !o.flagged && !o.elements.is_empty())
                .map(|o| o.elements.as_slice())
                .collect();
            let metrics = element_metrics(truth, &used);
            let selection = config.q_grid.as_ref().map(|grid| {
                let mut grid = grid.clone();
                grid.sort_unstable();
                grid.dedup();
                let (aic_counts, aic_percent) =
                    tally(&grid, mine.iter().map(|o| o.selected_aic), mine.len());
                let (bic_counts, bic_percent) =
                    tally(&grid, mine.iter().map(|o| o.selected_bic), mine.len());
                SelectionTally {
                    q_grid: grid,
                    aic_counts,
                    bic_counts,
                    aic_percent,
                    bic_percent,
                }
            });
            EstimatorSummary {
                estimator: *spec,
                label,
                replicates: mine.len(),
                heywood_count,
                heywood_percent: 100.0 * heywood_count as f64 / mine.len().max(1) as f64,
                used_replicates: used.len(),
                mean_abs_bias: metrics.mean_abs_bias(),
                mean_rmse: metrics.mean_rmse(),
                mean_underestimation: metrics.mean_underestimation(),
                metrics,
                selection,
            }
        })
        .collect()
}

/// Runs every replicate (in parallel on the current rayon pool) and
/// aggregates.
pub fn run_study(config: &SimulationConfig) -> Result<StudyReport> {
    config.validate()?;
    let labels: Vec<String> = config.estimators.iter().map(PenaltySpec::label).collect();
    if (1..labels.len()).any(|i| labels[..i].contains(&labels[i])) {
        return Err(Error::InvalidArgument("duplicate estimator".into()));
    }
    let started = Instant::now();
    let q_fit = config.resolved_q()?;
    let truth_params = config.setting.params()?;
    let truth = unique_elements(truth_params.loadings());
    let p = truth_params.p();
    let element_index = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();

    let outcomes: Vec<ReplicateOutcome> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, q_fit, r))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let estimators = summarize(config, &truth, &outcomes);
    Ok(StudyReport {
        config: config.clone(),
        q_fit,
        element_index,
        truth,
        estimators,
        outcomes,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Element-wise differences `a - b` of two estimators' metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub a: String,
    pub b: String,
    pub bias_diff: Vec<f64>,
    pub rmse_diff: Vec<f64>,
    pub underestimation_diff: Vec<f64>,
    pub mean_abs_bias_diff: f64,
    pub mean_rmse_diff: f64,
    pub mean_underestimation_diff: f64,
}

pub fn compare_estimators(a: &EstimatorSummary, b: &EstimatorSummary) -> Result<ComparisonTable> {
    let (ma, mb) = (&a.metrics, &b.metrics);
    if ma.bias.len() != mb.bias.len() {
        return Err(Error::Dimension(format!(
            "cannot compare {} elements with {}",
            ma.bias.len(),
            mb.bias.len()
        )));
    }
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u - v).collect::<Vec<_>>();
    Ok(ComparisonTable {
        a: a.label.clone(),
        b: b.label.clone(),
        bias_diff: diff(&ma.bias, &mb.bias),
        rmse_diff: diff(&ma.rmse, &mb.rmse),
        underestimation_diff: diff(&ma.underestimation, &mb.underestimation),
        mean_abs_bias_diff: a.mean_abs_bias - b.mean_abs_bias,
        mean_rmse_diff: a.mean_rmse - b.mean_rmse,
        mean_underestimation_diff: a.mean_underestimation - b.mean_underestimation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltyFamily;

    #[test]
    fn named_settings_materialise() {
        let a3 = LoadingSetting::A3.loadings().unwrap();
        assert_eq!(a3.shape(), (9, 3));
        assert_eq!(a3[(1, 0)], 0.65);
        assert_eq!(a3[(5, 1)], 0.45);
        assert_eq!(a3[(6, 2)], 0.80);
        assert_eq!(a3[(6, 0)], 0.0);
        let b3 = LoadingSetting::B3.loadings().unwrap();
        assert_eq!(b3[(2, 0)], 0.80);
        assert_eq!(b3[(8, 2)], 0.30);
        let a5 = LoadingSetting::A5.loadings().unwrap();
        assert_eq!(a5.shape(), (15, 3));
        assert_eq!(a5[(9, 1)], 0.20);
        let b8 = LoadingSetting::B8.loadings().unwrap();
        assert_eq!(b8.shape(), (24, 3));
        assert_eq!(b8[(23, 2)], 0.30);
        assert_eq!(b8[(8, 1)], 0.80);
        for s in ["A3", "B3", "A5", "B5", "A8", "B8"] {
            let params = s.parse::<LoadingSetting>().unwrap().params().unwrap();
            let sigma = assemble_sigma(&params);
            for j in 0..params.p() {
                assert!((sigma[(j, j)] - 1.0).abs() < 1e-15);
            }
        }
        assert!("C3".parse::<LoadingSetting>().is_err());
    }

    #[test]
    fn data_is_reproducible_per_replicate() {
        let a = generate_data(&LoadingSetting::A3, 20, 5, 3).unwrap();
        let b = generate_data(&LoadingSetting::A3, 20, 5, 3).unwrap();
        let c = generate_data(&LoadingSetting::A3, 20, 5, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn metrics_by_hand() {
        let truth = [1.0, 0.0];
        let e1 = [1.5, -1.0];
        let e2 = [0.5, 1.0];
        let m = element_metrics(&truth, &[&e1, &e2]);
        assert_eq!(m.bias, vec![0.0, 0.0]);
        assert_eq!(m.rmse, vec![0.5, 1.0]);
        assert_eq!(m.underestimation, vec![0.5, 0.5]);
    }

    #[test]
    fn single_replicate_percentages() {
        let cfg = SimulationConfig::new(LoadingSetting::A3, 100, 1, 9)
            .with_estimators(vec![
                PenaltySpec::none(),
                PenaltySpec::soft(PenaltyFamily::SampleVariance),
            ])
            .with_q_grid(vec![1, 2, 3]);
        let report = run_study(&cfg).unwrap();
        for s in &report.estimators {
            assert!(s.heywood_percent == 0.0 || s.heywood_percent == 100.0);
            let sel = s.selection.as_ref().unwrap();
            for v in sel.bic_percent.iter().chain(&sel.aic_percent) {
                assert!(*v == 0.0 || *v == 100.0);
            }
        }
        let cmp = compare_estimators(&report.estimators[0], &report.estimators[0]).unwrap();
        assert!(cmp.bias_diff.iter().all(|d| *d == 0.0 || d.is_nan()));
    }
}
