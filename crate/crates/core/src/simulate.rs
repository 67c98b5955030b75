//! Exact two-arm proportional-hazards simulation.
//!
//! Control times are drawn by inverse transform, `t = S⁻¹(u)`. Treatment times
//! solve `S(t)^λ = u`, i.e. `t = S⁻¹(u^{1/λ})`, through the same inverse.
//!
//! Conventions:
//! - administrative censoring: an event exactly at the cutoff is censored;
//! - [`race_pairs`]: a tie `Y == X` counts as "not before".

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::baselines::BaselineDistribution;
use crate::data::{Arm, Observation, SurvivalDataset};
use crate::error::{domain, Result};
use crate::model::HazardRatio;
use crate::parse::{error as parse_error, parse_call};
use crate::rng::{self, open_unit, CHUNK};

/// How the treatment arm's hazard relates to the control hazard `h(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreatmentEffect {
    /// `λ h(t)` at all times.
    Proportional(HazardRatio),
    /// `h(t)` before `onset`, `λ h(t)` after. Not proportional unless `λ = 1`.
    LateOnset { lambda: HazardRatio, onset: f64 },
}

impl TreatmentEffect {
    pub fn lambda(&self) -> HazardRatio {
        match *self {
            TreatmentEffect::Proportional(l) | TreatmentEffect::LateOnset { lambda: l, .. } => l,
        }
    }

    /// Treatment-arm cumulative hazard in terms of the control `H`.
    pub fn cumulative_hazard(&self, dist: &BaselineDistribution, t: f64) -> f64 {
        let base = dist.cumulative_hazard_unchecked(t);
        match *self {
            TreatmentEffect::Proportional(l) => l.value() * base,
            TreatmentEffect::LateOnset { lambda, onset } => {
                if t <= onset {
                    base
                } else {
                    let at_onset = dist.cumulative_hazard_unchecked(onset);
                    at_onset + lambda.value() * (base - at_onset)
                }
            }
        }
    }

    /// Treatment-arm hazard at `t > 0`.
    pub fn hazard(&self, dist: &BaselineDistribution, t: f64) -> f64 {
        let base = dist.hazard_unchecked(t);
        match *self {
            TreatmentEffect::Proportional(l) => l.value() * base,
            TreatmentEffect::LateOnset { lambda, onset } => {
                if t < onset {
                    base
                } else {
                    lambda.value() * base
                }
            }
        }
    }

    /// Treatment event time for a uniform draw `u` in (0, 1).
    pub fn sample(&self, dist: &BaselineDistribution, u: f64) -> f64 {
        let target = -u.ln();
        match *self {
            TreatmentEffect::Proportional(l) => dist.inverse_cumulative_hazard_unchecked(target / l.value()),
            TreatmentEffect::LateOnset { lambda, onset } => {
                let at_onset = dist.cumulative_hazard_unchecked(onset);
                if target <= at_onset {
                    dist.inverse_cumulative_hazard_unchecked(target)
                } else {
                    dist.inverse_cumulative_hazard_unchecked(at_onset + (target - at_onset) / lambda.value())
                }
            }
        }
    }
}

fn check_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("uniform draw must lie in (0, 1), got {u}")))
    }
}

/// Control event time `S⁻¹(u)`.
pub fn sample_control(dist: &BaselineDistribution, u: f64) -> Result<f64> {
    check_unit(u)?;
    dist.inverse_survival(u)
}

/// Treatment event time with survival `S(t)^λ`: `S⁻¹(u^{1/λ})`, evaluated as
/// `H⁻¹(-ln(u) / λ)` to keep precision when `u^{1/λ}` is close to one.
pub fn sample_treatment(dist: &BaselineDistribution, lambda: HazardRatio, u: f64) -> Result<f64> {
    check_unit(u)?;
    Ok(TreatmentEffect::Proportional(lambda).sample(dist, u))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CensoringSpec {
    #[default]
    None,
    /// Follow-up ends at `cutoff`.
    Administrative { cutoff: f64 },
    /// Independent exponential censoring times.
    RandomExponential { rate: f64 },
}

impl CensoringSpec {
    pub fn administrative(cutoff: f64) -> Result<Self> {
        if cutoff.is_finite() && cutoff > 0.0 {
            Ok(CensoringSpec::Administrative { cutoff })
        } else {
            Err(domain(format!("cutoff must be positive, got {cutoff}")))
        }
    }

    pub fn random_exponential(rate: f64) -> Result<Self> {
        if rate.is_finite() && rate > 0.0 {
            Ok(CensoringSpec::RandomExponential { rate })
        } else {
            Err(domain(format!("censoring rate must be positive, got {rate}")))
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CensoringSpec::None => Ok(()),
            CensoringSpec::Administrative { cutoff } => Self::administrative(cutoff).map(|_| ()),
            CensoringSpec::RandomExponential { rate } => Self::random_exponential(rate).map(|_| ()),
        }
    }
}

impl fmt::Display for CensoringSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CensoringSpec::None => write!(f, "none"),
            CensoringSpec::Administrative { cutoff } => write!(f, "admin(cutoff={cutoff})"),
            CensoringSpec::RandomExponential { rate } => write!(f, "exp(rate={rate})"),
        }
    }
}

impl Serialize for CensoringSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for CensoringSpec {
    type Err = crate::Error;

    /// `none`, `admin(cutoff=..)` or `exp(rate=..)`.
    fn from_str(text: &str) -> Result<Self> {
        let call = parse_call(text)?;
        let at = |pos: usize| move |e: crate::Error| parse_error(pos, e.to_string());
        match call.name.as_str() {
            "none" => {
                call.only(&[])?;
                Ok(CensoringSpec::None)
            }
            "admin" | "administrative" => {
                call.only(&["cutoff"])?;
                let (cutoff, pos) = call.scalar("cutoff")?;
                Self::administrative(cutoff).map_err(at(pos))
            }
            "exp" | "exponential" => {
                call.only(&["rate"])?;
                let (rate, pos) = call.scalar("rate")?;
                Self::random_exponential(rate).map_err(at(pos))
            }
            other => Err(parse_error(
                call.name_pos,
                format!("unknown censoring `{other}` (expected none, admin or exp)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub n_control: usize,
    pub n_treatment: usize,
    pub lambda: HazardRatio,
    pub baseline: BaselineDistribution,
    pub censoring: CensoringSpec,
    pub seed: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_control == 0 || self.n_treatment == 0 {
            return Err(domain("each arm needs at least one subject"));
        }
        self.censoring.validate()
    }
}

fn simulate_arm(config: &TrialConfig, arm: Arm, out: &mut Vec<Observation>) {
    let (n, event_stream, censor_stream) = match arm {
        Arm::Control => (config.n_control, 0, 2),
        Arm::Treatment => (config.n_treatment, 1, 3),
    };
    let effect = TreatmentEffect::Proportional(config.lambda);
    let mut rng = rng::stream(config.seed, event_stream);
    let mut censor_rng = rng::stream(config.seed, censor_stream);
    for _ in 0..n {
        let u = open_unit(&mut rng);
        let event_time = match arm {
            Arm::Control => config.baseline.inverse_cumulative_hazard_unchecked(-u.ln()),
            Arm::Treatment => effect.sample(&config.baseline, u),
        };
        let (time, event) = match config.censoring {
            CensoringSpec::None => (event_time, true),
            CensoringSpec::Administrative { cutoff } => {
                if event_time < cutoff {
                    (event_time, true)
                } else {
                    (cutoff, false)
                }
            }
            CensoringSpec::RandomExponential { rate } => {
                let censor_time = -open_unit(&mut censor_rng).ln() / rate;
                if event_time <= censor_time {
                    (event_time, true)
                } else {
                    (censor_time, false)
                }
            }
        };
        out.push(Observation { time, event, arm });
    }
}

/// Simulates a two-arm trial: control subjects first, then treatment.
///
/// Event times come from streams 0 (control) and 1 (treatment) of the seed and
/// censoring times from streams 2 and 3, so the uncensored event times are the
/// same whatever the censoring scheme or the other arm's size.
pub fn simulate_trial(config: &TrialConfig) -> Result<SurvivalDataset> {
    config.validate()?;
    let mut observations = Vec::with_capacity(config.n_control + config.n_treatment);
    simulate_arm(config, Arm::Control, &mut observations);
    simulate_arm(config, Arm::Treatment, &mut observations);
    SurvivalDataset::new(observations)
}

/// Counts pairs, out of `n_pairs` independent (treatment, control) draws, whose
/// treatment time is strictly earlier.
pub fn race_pairs(dist: &BaselineDistribution, lambda: HazardRatio, n_pairs: u64, seed: u64) -> Result<u64> {
    race_pairs_with(dist, &TreatmentEffect::Proportional(lambda), n_pairs, seed, 0)
}

/// [`race_pairs`] for any treatment effect, on the streams of cell `cell`.
///
/// Work is split into chunks of [`CHUNK`] pairs, chunk `k` drawing from stream
/// `(cell, k)`; the count is identical for any thread count.
pub fn race_pairs_with(
    dist: &BaselineDistribution,
    effect: &TreatmentEffect,
    n_pairs: u64,
    seed: u64,
    cell: u32,
) -> Result<u64> {
    if n_pairs == 0 {
        return Err(domain("n_pairs must be at least 1"));
    }
    let chunk = CHUNK as u64;
    let n_chunks = n_pairs.div_ceil(chunk);
    if n_chunks > u64::from(u32::MAX) {
        return Err(domain("too many pairs for one cell"));
    }
    let count = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let len = chunk.min(n_pairs - k * chunk);
            let mut rng = rng::stream(seed, rng::stream_index(cell, k as u32));
            let mut wins = 0u64;
            for _ in 0..len {
                let y = effect.sample(dist, open_unit(&mut rng));
                let x = dist.inverse_cumulative_hazard_unchecked(-open_unit(&mut rng).ln());
                if y < x {
                    wins += 1;
                }
            }
            wins
        })
        .sum();
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn exp1() -> BaselineDistribution {
        BaselineDistribution::exponential(1.0).unwrap()
    }

    fn hr(x: f64) -> HazardRatio {
        HazardRatio::new(x).unwrap()
    }

    fn families() -> Vec<BaselineDistribution> {
        ["exp(rate=1)", "weibull(shape=0.5,scale=1)", "weibull(shape=2,scale=1)", "gompertz(shape=0.1,rate=1)", "pwexp(breaks=1|2,rates=1|2|0.5)"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    /// One-sample Kolmogorov-Smirnov distance against a continuous CDF.
    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max)
    }

    fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let t = a[i].min(b[j]);
            while i < a.len() && a[i] <= t {
                i += 1;
            }
            while j < b.len() && b[j] <= t {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }

    fn draws(n: usize, seed: u64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| f(open_unit(&mut r))).collect()
    }

    #[test]
    fn sampling_examples() {
        assert!((sample_control(&exp1(), 0.5).unwrap() - LN_2).abs() < 1e-15);
        let w: BaselineDistribution = "weibull(shape=2,scale=1)".parse().unwrap();
        assert!((sample_control(&w, (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!((sample_treatment(&exp1(), hr(2.0), 0.25).unwrap() - LN_2).abs() < 1e-15);
        for dist in families() {
            let near_one = 1.0 - 1e-15;
            assert!(sample_control(&dist, near_one).unwrap() < 1e-6, "{dist}");
            for k in 1..20 {
                let u = k as f64 / 20.0;
                assert_eq!(sample_treatment(&dist, hr(1.0), u).unwrap(), sample_control(&dist, u).unwrap());
            }
        }
        assert!(sample_control(&exp1(), 1.0).is_err());
        assert!(sample_treatment(&exp1(), hr(2.0), 0.0).is_err());
    }

    #[test]
    fn treatment_draws_follow_powered_survival() {
        for dist in families() {
            let xs = draws(100_000, 11, |u| sample_treatment(&dist, hr(2.0), u).unwrap());
            let d = ks_distance(xs, |t| 1.0 - dist.survival(t).unwrap().powi(2));
            assert!(d < 0.01, "{dist}: KS {d}");
        }
    }

    #[test]
    fn scaled_exponential_equivalence() {
        let rate = 0.7;
        let dist = BaselineDistribution::exponential(rate).unwrap();
        let xs = draws(100_000, 5, |u| sample_treatment(&dist, hr(3.0), u).unwrap());
        let d = ks_distance(xs, |t| 1.0 - (-rate * 3.0 * t).exp());
        assert!(d < 0.01, "KS {d}");
    }

    #[test]
    fn unit_ratio_arms_match() {
        for dist in families() {
            let config = TrialConfig {
                n_control: 100_000,
                n_treatment: 100_000,
                lambda: hr(1.0),
                baseline: dist.clone(),
                censoring: CensoringSpec::None,
                seed: 3,
            };
            let data = simulate_trial(&config).unwrap();
            let pick = |arm| data.observations().iter().filter(|o| o.arm == arm).map(|o| o.time).collect();
            let d = ks_two_sample(pick(Arm::Control), pick(Arm::Treatment));
            assert!(d < 0.01, "{dist}: two-sample KS {d}");
        }
    }

    #[test]
    fn trial_is_deterministic_and_shaped() {
        let config = TrialConfig {
            n_control: 5,
            n_treatment: 7,
            lambda: hr(2.0),
            baseline: exp1(),
            censoring: CensoringSpec::None,
            seed: 7,
        };
        let a = simulate_trial(&config).unwrap();
        assert_eq!(a, simulate_trial(&config).unwrap());
        assert_eq!(a.len(), 12);
        assert_eq!(a.count(Arm::Control), 5);
        assert!(a.observations().iter().all(|o| o.event));
        let other = simulate_trial(&TrialConfig { seed: 8, ..config.clone() }).unwrap();
        assert_ne!(a, other);
        assert!(simulate_trial(&TrialConfig { n_control: 0, ..config }).is_err());
    }

    #[test]
    fn random_censoring_fraction() {
        let config = TrialConfig {
            n_control: 50_000,
            n_treatment: 50_000,
            lambda: hr(1.0),
            baseline: exp1(),
            censoring: CensoringSpec::random_exponential(1.0).unwrap(),
            seed: 99,
        };
        let data = simulate_trial(&config).unwrap();
        let frac = data.event_count() as f64 / data.len() as f64;
        assert!((frac - 0.5).abs() < 0.01, "event fraction {frac}");
    }

    #[test]
    fn censoring_never_lengthens_times() {
        let base = TrialConfig {
            n_control: 2000,
            n_treatment: 2000,
            lambda: hr(1.5),
            baseline: "weibull(shape=1.5,scale=2)".parse().unwrap(),
            censoring: CensoringSpec::None,
            seed: 21,
        };
        let uncensored = simulate_trial(&base).unwrap();
        let admin = simulate_trial(&TrialConfig { censoring: CensoringSpec::administrative(1.0).unwrap(), ..base.clone() })
            .unwrap();
        for (c, u) in admin.observations().iter().zip(uncensored.observations()) {
            assert!(c.time <= u.time);
            assert_eq!(c.event, u.time < 1.0);
            if !c.event {
                assert_eq!(c.time, 1.0);
            }
        }
        let random = simulate_trial(&TrialConfig { censoring: CensoringSpec::random_exponential(0.5).unwrap(), ..base })
            .unwrap();
        assert!(random.observations().iter().any(|o| !o.event));
        for (c, u) in random.observations().iter().zip(uncensored.observations()) {
            assert!(c.time <= u.time);
            if c.event {
                assert_eq!(c.time, u.time);
            }
        }
    }

    #[test]
    fn administrative_tie_is_censored() {
        // u = e^{-1} gives an exponential(1) event exactly at t = 1.
        let t = sample_control(&exp1(), (-1.0f64).exp()).unwrap();
        assert_eq!(t, 1.0);
        let cutoff = t;
        let event = t < cutoff;
        assert!(!event);
    }

    #[test]
    fn race_pairs_examples() {
        let n = 100_000u64;
        let sigma4 = |p: f64| 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        let two = race_pairs(&exp1(), hr(2.0), n, 1).unwrap() as f64 / n as f64;
        assert!((two - 2.0 / 3.0).abs() < 0.006, "{two}");
        let one = race_pairs(&exp1(), hr(1.0), n, 2).unwrap() as f64 / n as f64;
        assert!((one - 0.5).abs() < sigma4(0.5), "{one}");
        let w: BaselineDistribution = "weibull(shape=0.5,scale=1)".parse().unwrap();
        let three = race_pairs(&w, hr(3.0), n, 3).unwrap() as f64 / n as f64;
        assert!((three - 0.75).abs() < 0.0055, "{three}");
        assert!(race_pairs(&exp1(), hr(2.0), 0, 1).is_err());
    }

    #[test]
    fn race_pairs_independent_of_thread_count() {
        let dist = exp1();
        let n = 3 * CHUNK as u64 + 17;
        let expected = race_pairs(&dist, hr(2.0), n, 42).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(single.install(|| race_pairs(&dist, hr(2.0), n, 42).unwrap()), expected);
    }

    #[test]
    fn censoring_text() {
        assert_eq!("none".parse::<CensoringSpec>().unwrap(), CensoringSpec::None);
        assert_eq!("admin(cutoff=5)".parse::<CensoringSpec>().unwrap(), CensoringSpec::Administrative { cutoff: 5.0 });
        assert_eq!("exp(rate=0.25)".parse::<CensoringSpec>().unwrap(), CensoringSpec::RandomExponential { rate: 0.25 });
        for spec in [CensoringSpec::None, CensoringSpec::administrative(2.5).unwrap(), CensoringSpec::random_exponential(0.3).unwrap()] {
            assert_eq!(spec.to_string().parse::<CensoringSpec>().unwrap(), spec);
        }
        assert!(matches!("exp(rate=0)".parse::<CensoringSpec>(), Err(crate::Error::Parse { position: 9, .. })));
        assert!(matches!("uniform(a=1)".parse::<CensoringSpec>(), Err(crate::Error::Parse { position: 0, .. })));
    }

    #[test]
    fn late_onset_effect_is_consistent() {
        let dist = exp1();
        let effect = TreatmentEffect::LateOnset { lambda: hr(3.0), onset: LN_2 };
        for k in 1..50 {
            let u = k as f64 / 50.0;
            let t = effect.sample(&dist, u);
            assert!(((-effect.cumulative_hazard(&dist, t)).exp() - u).abs() < 1e-12);
        }
        assert_eq!(effect.hazard(&dist, 0.1), 1.0);
        assert_eq!(effect.hazard(&dist, 1.0), 3.0);
    }
}
