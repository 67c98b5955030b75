//! Kaplan-Meier curves and a Cox proportional-hazards fit for the arm indicator.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Arm, SurvivalDataset};
use crate::error::{domain, Error, Result};

/// Product-limit survival curve. `values[i]` holds on `[jump_times[i], jump_times[i+1])`;
/// the curve is 1 before the first jump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepSurvivalCurve {
    pub jump_times: Vec<f64>,
    pub values: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl StepSurvivalCurve {
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&j| j <= t);
        if idx == 0 {
            1.0
        } else {
            self.values[idx - 1]
        }
    }
}

fn sorted_times(data: &SurvivalDataset, arm: Option<Arm>) -> Vec<(f64, bool)> {
    let mut rows: Vec<(f64, bool)> = data
        .observations()
        .iter()
        .filter(|o| arm.is_none_or(|a| o.arm == a))
        .map(|o| (o.time, o.event))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}

/// Kaplan-Meier estimate for one arm, or for everyone when `arm` is `None`.
/// Censored subjects leave the risk set after their time without a jump.
pub fn kaplan_meier(data: &SurvivalDataset, arm: Option<Arm>) -> Result<StepSurvivalCurve> {
    let rows = sorted_times(data, arm);
    if rows.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut curve = StepSurvivalCurve { jump_times: vec![], values: vec![], at_risk: vec![], events: vec![] };
    // Between censorings the product-limit factors telescope, so the curve is
    // anchor_value * remaining / anchor_risk: exact empirical survival when
    // nothing is censored.
    let mut anchor_value = 1.0;
    let mut anchor_risk = rows.len();
    let mut at_risk = rows.len();
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].0;
        let mut j = i;
        let mut deaths = 0;
        while j < rows.len() && rows[j].0 == t {
            deaths += rows[j].1 as usize;
            j += 1;
        }
        let censored = (j - i) - deaths;
        if deaths > 0 {
            let survival = anchor_value * ((at_risk - deaths) as f64 / anchor_risk as f64);
            curve.jump_times.push(t);
            curve.values.push(survival);
            curve.at_risk.push(at_risk);
            curve.events.push(deaths);
        }
        at_risk -= j - i;
        if censored > 0 {
            anchor_value = curve.values.last().copied().unwrap_or(1.0);
            anchor_risk = at_risk;
        }
        i = j;
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ties {
    #[default]
    Breslow,
    Efron,
}

impl std::str::FromStr for Ties {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "breslow" => Ok(Ties::Breslow),
            "efron" => Ok(Ties::Efron),
            other => Err(domain(format!("unknown ties method `{other}` (expected breslow or efron)"))),
        }
    }
}

/// A distinct event time: risk-set sums and tied-event sums for the arm indicator.
#[derive(Debug, Clone, Copy)]
struct EventGroup {
    /// Events at this time.
    deaths: usize,
    /// Treatment-arm events at this time.
    treated_deaths: usize,
    /// Subjects at risk (time >= t), by arm.
    risk_control: usize,
    risk_treated: usize,
}

/// Groups event times in one descending sweep with running risk-set counts.
fn event_groups(data: &SurvivalDataset) -> Vec<EventGroup> {
    let mut rows: Vec<(f64, bool, bool)> = data
        .observations()
        .iter()
        .map(|o| (o.time, o.event, o.arm == Arm::Treatment))
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups = Vec::new();
    let (mut risk_control, mut risk_treated) = (0usize, 0usize);
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].0;
        let (mut deaths, mut treated_deaths) = (0, 0);
        let mut j = i;
        while j < rows.len() && rows[j].0 == t {
            let (_, event, treated) = rows[j];
            if treated {
                risk_treated += 1;
            } else {
                risk_control += 1;
            }
            if event {
                deaths += 1;
                treated_deaths += treated as usize;
            }
            j += 1;
        }
        if deaths > 0 {
            groups.push(EventGroup { deaths, treated_deaths, risk_control, risk_treated });
        }
        i = j;
    }
    groups.reverse();
    groups
}

/// Log partial likelihood of `beta` with its score and observed information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialLikelihood {
    pub value: f64,
    pub score: f64,
    pub information: f64,
}

fn evaluate(groups: &[EventGroup], beta: f64, ties: Ties) -> PartialLikelihood {
    let w = beta.exp();
    let mut out = PartialLikelihood { value: 0.0, score: 0.0, information: 0.0 };
    for g in groups {
        // Sums over the risk set of e^{βz}, z e^{βz}, z² e^{βz}; z ∈ {0, 1}.
        let s0 = g.risk_control as f64 + g.risk_treated as f64 * w;
        let s1 = g.risk_treated as f64 * w;
        out.value += beta * g.treated_deaths as f64;
        out.score += g.treated_deaths as f64;
        match ties {
            Ties::Breslow => {
                let d = g.deaths as f64;
                let mean = s1 / s0;
                out.value -= d * s0.ln();
                out.score -= d * mean;
                out.information += d * (mean - mean * mean);
            }
            Ties::Efron => {
                let d = g.deaths as f64;
                let tied0 = (g.deaths - g.treated_deaths) as f64 + g.treated_deaths as f64 * w;
                let tied1 = g.treated_deaths as f64 * w;
                for k in 0..g.deaths {
                    let f = k as f64 / d;
                    let a0 = s0 - f * tied0;
                    let a1 = s1 - f * tied1;
                    let mean = a1 / a0;
                    out.value -= a0.ln();
                    out.score -= mean;
                    out.information += mean - mean * mean;
                }
            }
        }
    }
    out
}

/// Log partial likelihood for the treatment indicator at `beta`, with exact
/// first and (negated) second derivatives.
pub fn partial_loglik(data: &SurvivalDataset, beta: f64, ties: Ties) -> Result<PartialLikelihood> {
    if data.event_count() == 0 {
        return Err(Error::NoEvents);
    }
    Ok(evaluate(&event_groups(data), beta, ties))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxOptions {
    pub ties: Ties,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions { ties: Ties::Breslow, tol: 1e-10, max_iter: 50 }
    }
}

/// Fitted log hazard ratio for treatment vs control.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxFit {
    pub beta_hat: f64,
    pub se: f64,
    pub loglik_at_zero: f64,
    pub loglik_at_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ties: Ties,
    /// Log-likelihood after each accepted step, starting at `beta = 0`.
    pub trace: Vec<f64>,
}

impl CoxFit {
    pub fn hazard_ratio(&self) -> f64 {
        self.beta_hat.exp()
    }
}

const SEPARATION_LIMIT: f64 = 20.0;

/// Newton-Raphson from `beta = 0`, halving the step while the log-likelihood
/// would decrease. Converged when `|score| < tol` or `|Δβ| < tol`.
pub fn cox_fit(data: &SurvivalDataset, options: &CoxOptions) -> Result<CoxFit> {
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(domain("tolerance must be positive and max_iter at least 1"));
    }
    let (control_events, treated_events) = (data.events_in(Arm::Control), data.events_in(Arm::Treatment));
    if control_events == 0 || treated_events == 0 {
        return Err(Error::MonotoneLikelihood(format!(
            "events in only one arm (control {control_events}, treatment {treated_events}); the estimate diverges"
        )));
    }
    let groups = event_groups(data);
    let mut beta = 0.0;
    let mut current = evaluate(&groups, beta, options.ties);
    let loglik_at_zero = current.value;
    let mut trace = vec![current.value];
    let finish = |beta: f64, at: PartialLikelihood, iterations: usize, trace: Vec<f64>| -> Result<CoxFit> {
        if !(at.information > 0.0) {
            return Err(Error::MonotoneLikelihood(format!(
                "observed information {} is not positive at beta = {beta}",
                at.information
            )));
        }
        Ok(CoxFit {
            beta_hat: beta,
            se: at.information.powf(-0.5),
            loglik_at_zero,
            loglik_at_hat: at.value,
            iterations,
            converged: true,
            ties: options.ties,
            trace,
        })
    };
    for iteration in 1..=options.max_iter {
        if current.score.abs() < options.tol {
            return finish(beta, current, iteration - 1, trace);
        }
        if !(current.information > 0.0) {
            return Err(Error::MonotoneLikelihood(format!(
                "observed information {} is not positive at beta = {beta}",
                current.information
            )));
        }
        let mut step = current.score / current.information;
        let mut candidate;
        let mut next;
        loop {
            candidate = beta + step;
            if candidate.abs() > SEPARATION_LIMIT {
                return Err(Error::Separation { beta: candidate, iteration });
            }
            next = evaluate(&groups, candidate, options.ties);
            // Decreases at rounding level are flat, not overshoot.
            let noise = 1e-13 * current.value.abs().max(1.0);
            if next.value >= current.value - noise || step.abs() < options.tol {
                break;
            }
            step *= 0.5;
        }
        beta = candidate;
        current = next;
        trace.push(current.value);
        if step.abs() < options.tol || current.score.abs() < options.tol {
            return finish(beta, current, iteration, trace);
        }
    }
    Err(Error::NonConvergence { iterations: options.max_iter, trace })
}

/// Wald interval for the hazard ratio: `exp(β̂ ± z se)`.
pub fn wald_ci(fit: &CoxFit, level: f64) -> Result<(f64, f64)> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    Ok(((fit.beta_hat - z * fit.se).exp(), (fit.beta_hat + z * fit.se).exp()))
}

/// Complementary log-log transformed Kaplan-Meier curves, `(log t, log(-log S(t)))`.
/// Under proportional hazards the treatment curve sits `log λ` above the control curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloglogCurves {
    pub control: Vec<(f64, f64)>,
    pub treatment: Vec<(f64, f64)>,
}

impl CloglogCurves {
    /// Mean vertical gap (treatment minus control) at the given log-times,
    /// reading each curve as a right-continuous step function. Log-times
    /// before either curve's first point are skipped.
    pub fn mean_offset(&self, log_times: &[f64]) -> Option<f64> {
        let step = |curve: &[(f64, f64)], x: f64| {
            let idx = curve.partition_point(|p| p.0 <= x);
            (idx > 0).then(|| curve[idx - 1].1)
        };
        let gaps: Vec<f64> = log_times
            .iter()
            .filter_map(|&x| Some(step(&self.treatment, x)? - step(&self.control, x)?))
            .collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

pub fn cloglog_curves(data: &SurvivalDataset) -> Result<CloglogCurves> {
    let transform = |arm: Arm| -> Result<Vec<(f64, f64)>> {
        let curve = match kaplan_meier(data, Some(arm)) {
            Ok(c) => c,
            Err(Error::EmptySelection) => {
                return Err(Error::InsufficientEvents(format!("{arm:?} arm is empty")));
            }
            Err(e) => return Err(e),
        };
        let points: Vec<(f64, f64)> = curve
            .jump_times
            .iter()
            .zip(&curve.values)
            .filter(|&(&t, &s)| s > 0.0 && s < 1.0 && t > 0.0)
            .map(|(&t, &s)| (t.ln(), (-s.ln()).ln()))
            .collect();
        if points.len() < 2 {
            return Err(Error::InsufficientEvents(format!(
                "{arm:?} arm has {} usable event times, need at least 2",
                points.len()
            )));
        }
        Ok(points)
    };
    Ok(CloglogCurves { control: transform(Arm::Control)?, treatment: transform(Arm::Treatment)? })
}
