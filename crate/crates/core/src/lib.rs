//! Hazard ratios read as odds.
//!
//! Under proportional hazards, the hazard ratio `λ` equals the odds that a
//! randomly chosen treatment subject has the event before a randomly chosen
//! control subject, so `P(Y < X) = λ / (1 + λ)`. This crate provides the
//! conversions, exact two-arm simulation, a Cox fit for a binary arm
//! indicator, Kaplan-Meier curves, concordance statistics, and a checker that
//! confirms the identity by time-domain quadrature and Monte Carlo.

pub mod baselines;
pub mod concordance;
pub mod data;
pub mod error;
pub mod estimate;
pub mod model;
mod parse;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod verify;

pub use baselines::{BaselineDistribution, Family};
pub use concordance::{between_group_concordance, harrell_c, ConcordanceResult, PairRule};
pub use data::{Arm, Observation, SurvivalDataset};
pub use error::{Error, Result};
pub use estimate::{
    cloglog_curves, cox_fit, kaplan_meier, partial_loglik, wald_ci, CoxFit, CoxOptions, StepSurvivalCurve,
    Ties,
};
pub use model::{explain, hr_to_prob, prob_later, prob_to_hr, HazardRatio, OddsRendering, PrecedenceProbability};
pub use simulate::{race_pairs, sample_control, sample_treatment, simulate_trial, CensoringSpec, TreatmentEffect, TrialConfig};
pub use verify::{
    p_after_by_quadrature, p_before_by_monte_carlo, run_verification, VerificationReport, VerifyOptions,
};
