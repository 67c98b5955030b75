//! Parametric control-arm event-time distributions.
//!
//! Every family is defined through its cumulative hazard `H(t)`, with
//! `S(t) = exp(-H(t))`, `h(t) = H'(t)` and `f(t) = h(t) S(t)`.
//! The inverse survival function inverts `H`, which also gives exact sampling
//! from `S(t)^λ` by solving `H(t) = -ln(u) / λ`.
//!
//! Text form (see [`BaselineDistribution::from_str`]):
//!
//! ```text
//! exp(rate=1)
//! weibull(shape=0.5,scale=2)
//! gompertz(shape=0.1,rate=1)
//! pwexp(breaks=1|2,rates=1|2|0.5)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{domain, Result};
use crate::parse::{error as parse_error, parse_call};

/// Distribution family and parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Constant hazard `rate`.
    Exponential { rate: f64 },
    /// `H(t) = (t / scale)^shape`.
    Weibull { shape: f64, scale: f64 },
    /// Hazard `rate * exp(shape * t)`; `shape >= 0` keeps the distribution proper.
    Gompertz { shape: f64, rate: f64 },
    /// Hazard `rates[i]` on `[breaks[i-1], breaks[i])`, with `breaks[-1] = 0`.
    PiecewiseExponential { breaks: Vec<f64>, rates: Vec<f64> },
}

/// A validated baseline distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineDistribution {
    family: Family,
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {value}")))
    }
}

impl BaselineDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Self { family: Family::Exponential { rate } })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(Self { family: Family::Weibull { shape, scale } })
    }

    /// Negative `shape` is rejected: the survival function would level off above zero.
    pub fn gompertz(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape >= 0.0) {
            return Err(domain(format!(
                "gompertz shape must be >= 0 for a proper distribution, got {shape}"
            )));
        }
        positive("rate", rate)?;
        Ok(Self { family: Family::Gompertz { shape, rate } })
    }

    pub fn piecewise_exponential(breaks: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != breaks.len() + 1 {
            return Err(domain(format!(
                "piecewise exponential needs one more rate than breakpoint ({} breaks, {} rates)",
                breaks.len(),
                rates.len()
            )));
        }
        for &r in &rates {
            positive("rate", r)?;
        }
        let mut prev = 0.0;
        for &b in &breaks {
            if !(b.is_finite() && b > prev) {
                return Err(domain("breakpoints must be positive and strictly increasing"));
            }
            prev = b;
        }
        Ok(Self { family: Family::PiecewiseExponential { breaks, rates } })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Points where the hazard is discontinuous.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.family {
            Family::PiecewiseExponential { breaks, .. } => breaks,
            _ => &[],
        }
    }

    /// True when `h(t)` diverges as `t -> 0`.
    pub fn hazard_singular_at_zero(&self) -> bool {
        matches!(self.family, Family::Weibull { shape, .. } if shape < 1.0)
    }

    fn check_time(t: f64) -> Result<()> {
        if t.is_nan() || t < 0.0 {
            Err(domain(format!("time must be nonnegative, got {t}")))
        } else {
            Ok(())
        }
    }

    /// `H(t) = ∫₀ᵗ h(s) ds`.
    pub fn cumulative_hazard(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.cumulative_hazard_unchecked(t))
    }

    pub(crate) fn cumulative_hazard_unchecked(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential { rate } => rate * t,
            Family::Weibull { shape, scale } => (t / scale).powf(*shape),
            Family::Gompertz { shape, rate } => {
                if *shape == 0.0 {
                    rate * t
                } else {
                    rate / shape * (shape * t).exp_m1()
                }
            }
            Family::PiecewiseExponential { breaks, rates } => {
                let mut total = 0.0;
                let mut start = 0.0;
                for (i, &rate) in rates.iter().enumerate() {
                    let end = breaks.get(i).copied().unwrap_or(f64::INFINITY);
                    if t <= end {
                        return total + rate * (t - start);
                    }
                    total += rate * (end - start);
                    start = end;
                }
                unreachable!("last segment is unbounded")
            }
        }
    }

    /// `S(t) = exp(-H(t))`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        Ok((-self.cumulative_hazard(t)?).exp())
    }

    /// `h(t)`. The Weibull hazard with shape < 1 is undefined at `t = 0`.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if t == 0.0 && self.hazard_singular_at_zero() {
            return Err(domain("weibull hazard with shape < 1 diverges at t = 0"));
        }
        Ok(self.hazard_unchecked(t))
    }

    pub(crate) fn hazard_unchecked(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential { rate } => *rate,
            Family::Weibull { shape, scale } => {
                if *shape == 1.0 {
                    1.0 / scale
                } else {
                    shape / scale * (t / scale).powf(shape - 1.0)
                }
            }
            Family::Gompertz { shape, rate } => rate * (shape * t).exp(),
            Family::PiecewiseExponential { breaks, rates } => {
                let segment = breaks.partition_point(|&b| b <= t);
                rates[segment]
            }
        }
    }

    /// `f(t) = h(t) S(t)`.
    pub fn density(&self, t: f64) -> Result<f64> {
        Ok(self.hazard(t)? * self.survival(t)?)
    }

    /// The `t` with `H(t) = target`, for `target >= 0`.
    pub fn inverse_cumulative_hazard(&self, target: f64) -> Result<f64> {
        if target.is_nan() || target < 0.0 {
            return Err(domain(format!("cumulative hazard must be nonnegative, got {target}")));
        }
        Ok(self.inverse_cumulative_hazard_unchecked(target))
    }

    pub(crate) fn inverse_cumulative_hazard_unchecked(&self, target: f64) -> f64 {
        match &self.family {
            Family::Exponential { rate } => target / rate,
            Family::Weibull { shape, scale } => scale * target.powf(1.0 / shape),
            Family::Gompertz { shape, rate } => {
                if *shape == 0.0 {
                    target / rate
                } else {
                    (shape * target / rate).ln_1p() / shape
                }
            }
            Family::PiecewiseExponential { breaks, rates } => {
                let mut remaining = target;
                let mut start = 0.0;
                for (i, &rate) in rates.iter().enumerate() {
                    let end = breaks.get(i).copied().unwrap_or(f64::INFINITY);
                    let segment_mass = rate * (end - start);
                    if remaining <= segment_mass {
                        return start + remaining / rate;
                    }
                    remaining -= segment_mass;
                    start = end;
                }
                unreachable!("last segment is unbounded")
            }
        }
    }

    /// The `t` with `S(t) = u`, for `u` in `(0, 1]`.
    pub fn inverse_survival(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(domain(format!("survival level must lie in (0, 1], got {u}")));
        }
        Ok(self.inverse_cumulative_hazard_unchecked(-u.ln()))
    }

    /// Inverse survival by bisection on the monotone `S`, to `|S(t) - u| < 1e-12`.
    ///
    /// Works for any family; the closed forms in [`Self::inverse_survival`] are
    /// checked against it.
    pub fn inverse_survival_by_bisection(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(domain(format!("survival level must lie in (0, 1], got {u}")));
        }
        let s = |t: f64| (-self.cumulative_hazard_unchecked(t)).exp();
        if u == 1.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while s(hi) > u {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(domain("bisection bracket overflowed"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            let value = s(mid);
            if (value - u).abs() < 1e-12 || mid == lo || mid == hi {
                return Ok(mid);
            }
            if value > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl fmt::Display for BaselineDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("|");
        match &self.family {
            Family::Exponential { rate } => write!(f, "exp(rate={rate})"),
            Family::Weibull { shape, scale } => write!(f, "weibull(shape={shape},scale={scale})"),
            Family::Gompertz { shape, rate } => write!(f, "gompertz(shape={shape},rate={rate})"),
            Family::PiecewiseExponential { breaks, rates } => {
                write!(f, "pwexp(breaks={},rates={})", join(breaks), join(rates))
            }
        }
    }
}

impl Serialize for BaselineDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for BaselineDistribution {
    type Err = crate::Error;

    /// Parses `exp(rate=..)`, `weibull(shape=..,scale=..)`,
    /// `gompertz(shape=..,rate=..)` or `pwexp(breaks=a|b|..,rates=x|y|..)`.
    /// `exponential` and `piecewise` are accepted aliases. Errors carry the byte
    /// offset of the offending token.
    fn from_str(text: &str) -> Result<Self> {
        let call = parse_call(text)?;
        let at = |pos: usize| move |e: crate::Error| parse_error(pos, e.to_string());
        match call.name.as_str() {
            "exp" | "exponential" => {
                call.only(&["rate"])?;
                let (rate, pos) = call.scalar("rate")?;
                Self::exponential(rate).map_err(at(pos))
            }
            "weibull" => {
                call.only(&["shape", "scale"])?;
                let (shape, shape_pos) = call.scalar("shape")?;
                let (scale, scale_pos) = call.scalar("scale")?;
                positive("shape", shape).map_err(at(shape_pos))?;
                Self::weibull(shape, scale).map_err(at(scale_pos))
            }
            "gompertz" => {
                call.only(&["shape", "rate"])?;
                let (shape, shape_pos) = call.scalar("shape")?;
                let (rate, rate_pos) = call.scalar("rate")?;
                Self::gompertz(shape, 1.0).map_err(at(shape_pos))?;
                Self::gompertz(shape, rate).map_err(at(rate_pos))
            }
            "pwexp" | "piecewise" => {
                call.only(&["breaks", "rates"])?;
                let breaks = call.list("breaks")?;
                let rates = call.list("rates")?;
                let values = |p: &crate::parse::Param| p.values.iter().map(|v| v.0).collect::<Vec<_>>();
                Self::piecewise_exponential(values(breaks), values(rates)).map_err(at(breaks.key_pos))
            }
            other => Err(parse_error(
                call.name_pos,
                format!("unknown distribution `{other}` (expected exp, weibull, gompertz or pwexp)"),
            )),
        }
    }
}
