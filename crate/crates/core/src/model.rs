//! Hazard ratio, precedence probability and odds.
//!
//! Under proportional hazards the hazard ratio `λ` (treatment over control) is
//! the odds that a treatment subject's event precedes a control subject's:
//! `P(Y < X) = λ / (1 + λ)` and `P(Y > X) = 1 / (1 + λ)`.

use std::fmt;

use serde::Serialize;

use crate::error::{domain, Result};

/// Ratio of treatment to control hazards. Positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct HazardRatio(f64);

impl HazardRatio {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(HazardRatio(lambda))
        } else {
            Err(domain(format!("hazard ratio must be positive and finite, got {lambda}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn ln(self) -> f64 {
        self.0.ln()
    }
}

impl fmt::Display for HazardRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A probability in the open interval (0, 1), stored together with its complement.
///
/// Keeping `1 - p` alongside `p` lets `p / (1 - p)` stay accurate when `p` is
/// within a few ulps of one (hazard ratios up to 1e6 and beyond).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecedenceProbability {
    p: f64,
    #[serde(skip)]
    complement: f64,
}

impl PrecedenceProbability {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p < 1.0 {
            Ok(PrecedenceProbability { p, complement: 1.0 - p })
        } else {
            Err(domain(format!("probability must lie in (0, 1), got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        self.p
    }

    pub fn complement(self) -> f64 {
        self.complement
    }

    /// Nearest integer percentage, halves rounded away from zero.
    pub fn percent(self) -> i64 {
        (self.p * 100.0).round() as i64
    }
}

impl fmt::Display for PrecedenceProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent())
    }
}

/// Odds written as `numerator:1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OddsRendering {
    pub numerator: f64,
    pub display_precision: usize,
}

impl OddsRendering {
    pub fn new(numerator: f64, display_precision: usize) -> Result<Self> {
        if !(numerator.is_finite() && numerator >= 0.0) {
            return Err(domain(format!("odds must be nonnegative and finite, got {numerator}")));
        }
        Ok(OddsRendering { numerator, display_precision })
    }

    pub fn from_hr(hr: HazardRatio) -> Self {
        OddsRendering { numerator: hr.value(), display_precision: 1 }
    }
}

impl fmt::Display for OddsRendering {
    /// Rounds half away from zero at `display_precision` decimals and strips
    /// trailing zeros, so 2 renders as `2:1` and 3.5 as `3.5:1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = 10f64.powi(self.display_precision as i32);
        let rounded = (self.numerator * scale).round() / scale;
        let mut text = format!("{:.*}", self.display_precision, rounded);
        if text.contains('.') {
            while text.ends_with('0') {
                text.pop();
            }
            if text.ends_with('.') {
                text.pop();
            }
        }
        write!(f, "{text}:1")
    }
}

/// `λ / (1 + λ)`: probability the treatment subject's event comes first.
pub fn hr_to_prob(hr: HazardRatio) -> PrecedenceProbability {
    let lambda = hr.value();
    let denom = 1.0 + lambda;
    PrecedenceProbability { p: lambda / denom, complement: 1.0 / denom }
}

/// `p / (1 - p)`, the inverse of [`hr_to_prob`].
pub fn prob_to_hr(p: PrecedenceProbability) -> HazardRatio {
    HazardRatio(p.value() / p.complement())
}

/// `1 / (1 + λ)`: probability the treatment subject's event comes later.
pub fn prob_later(hr: HazardRatio) -> PrecedenceProbability {
    let before = hr_to_prob(hr);
    PrecedenceProbability { p: before.complement, complement: before.p }
}

/// Plain-language statement of a hazard ratio as odds and probability.
pub fn explain(hr: HazardRatio, event_name: &str) -> String {
    let odds = OddsRendering::from_hr(hr);
    let prob = hr_to_prob(hr);
    format!(
        "The odds are roughly {odds} (the probability is {}%) that you will {event_name} before someone in the comparison group.",
        prob.percent()
    )
}
