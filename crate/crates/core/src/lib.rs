//! Estimation for the normal linear factor model by maximum likelihood (ML),
//! maximum penalised likelihood (MPL) and maximum softly-penalised likelihood
//! (MSPL).
//!
//! The penalised estimators keep every unique variance strictly positive, so
//! they never produce Heywood cases. With the soft scaling regime the penalty
//! vanishes at rate `n^{-1/2}` relative to the likelihood and the estimators
//! keep the usual `sqrt(n)` asymptotics of ML.
//!
//! Module map:
//! - [`model`]: parameters, sample moments, profile log-likelihood, score.
//! - [`penalty`]: penalty families, scaling regimes, existence-condition probes.
//! - [`estimation`]: EM warm start, Newton refinement, Heywood diagnosis.
//! - [`selection`]: AIC/BIC and choice of the number of factors.
//! - [`simulation`]: seeded Monte Carlo studies.

pub mod error;
pub mod estimation;
mod linalg;
pub mod model;
pub mod penalty;
pub mod selection;
pub mod simulation;

pub use error::{Error, Result};
pub use estimation::{
    em_step, fit, heywood_diagnose, newton_refine, principal_axis_start, FitOptions, FitResult,
    HeywoodDiagnosis, HeywoodReason, NewtonOutcome, StartStrategy,
};
pub use model::{
    assemble_sigma, communalities, discrepancy, log_likelihood, sample_moments, score,
    FactorParams, GradientVector, SampleMoments,
};
pub use penalty::{
    effective_rho, penalised_log_likelihood, penalty_gradient, penalty_value,
    verify_existence_conditions, ConditionOutcome, ConditionReport, PenaltyFamily, PenaltySpec,
    ProbeConfig, Scaling,
};
pub use selection::{
    free_parameter_count, information_criteria, select_q, SelectionResult, SelectionRow,
};
pub use simulation::{
    compare_estimators, generate_data, run_study, ComparisonTable, EstimatorSummary,
    LoadingSetting, ReplicateOutcome, SimulationConfig, StudyReport,
};

pub use nalgebra::{DMatrix, DVector};
