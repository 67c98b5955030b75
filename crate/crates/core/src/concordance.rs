//! Harrell's c-statistic and the treatment-vs-control concordance.
//!
//! A pair is comparable when its observed times differ and the pair rule
//! accepts its censoring pattern. It is concordant when the subject with the
//! higher risk score has the shorter time; equal scores count one half.
//! Pairs with tied observed times are never comparable.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Arm, Observation, SurvivalDataset};
use crate::error::{Error, Result};

/// Which pairs count as comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRule {
    /// Both members had the event.
    #[default]
    BothEvents,
    /// The member with the shorter time had the event.
    HarrellStandard,
}

impl std::str::FromStr for PairRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "both-events" | "both_events" => Ok(PairRule::BothEvents),
            "harrell" | "harrell_standard" => Ok(PairRule::HarrellStandard),
            other => Err(Error::Domain(format!("unknown pair rule `{other}` (expected both-events or harrell)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcordanceResult {
    pub concordant: u64,
    pub discordant: u64,
    pub tied_prediction: u64,
    pub comparable: u64,
    pub c: f64,
    pub pair_rule: PairRule,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    concordant: u64,
    discordant: u64,
    tied: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            concordant: self.concordant + o.concordant,
            discordant: self.discordant + o.discordant,
            tied: self.tied + o.tied,
        }
    }
}

impl Counts {
    #[inline]
    fn record(&mut self, a: &Observation, score_a: f64, b: &Observation, score_b: f64, rule: PairRule) {
        let (first, first_score, second, second_score) = if a.time < b.time {
            (a, score_a, b, score_b)
        } else if b.time < a.time {
            (b, score_b, a, score_a)
        } else {
            return;
        };
        let comparable = match rule {
            PairRule::BothEvents => first.event && second.event,
            PairRule::HarrellStandard => first.event,
        };
        if !comparable {
            return;
        }
        if first_score > second_score {
            self.concordant += 1;
        } else if first_score < second_score {
            self.discordant += 1;
        } else {
            self.tied += 1;
        }
    }

    fn finish(self, rule: PairRule) -> Result<ConcordanceResult> {
        let comparable = self.concordant + self.discordant + self.tied;
        if comparable == 0 {
            return Err(Error::NoComparablePairs);
        }
        Ok(ConcordanceResult {
            concordant: self.concordant,
            discordant: self.discordant,
            tied_prediction: self.tied,
            comparable,
            c: (self.concordant as f64 + 0.5 * self.tied as f64) / comparable as f64,
            pair_rule: rule,
        })
    }
}

/// Harrell's c over all pairs of subjects, `scores[i]` being subject `i`'s risk score.
pub fn harrell_c(data: &SurvivalDataset, scores: &[f64], rule: PairRule) -> Result<ConcordanceResult> {
    let obs = data.observations();
    if scores.len() != obs.len() {
        return Err(Error::InvalidData(format!(
            "{} scores for {} observations",
            scores.len(),
            obs.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("scores contain NaN".into()));
    }
    let counts = (0..obs.len())
        .into_par_iter()
        .map(|i| {
            let mut c = Counts::default();
            for j in i + 1..obs.len() {
                c.record(&obs[i], scores[i], &obs[j], scores[j], rule);
            }
            c
        })
        .reduce(Counts::default, |a, b| a + b);
    counts.finish(rule)
}

/// Concordance over treatment × control pairs only, scoring treatment above
/// control: `c` estimates `P(Y < X)`, the probability that the treatment
/// subject's event comes first.
pub fn between_group_concordance(data: &SurvivalDataset, rule: PairRule) -> Result<ConcordanceResult> {
    let pick = |arm| data.observations().iter().filter(|o| o.arm == arm).copied().collect::<Vec<_>>();
    let (treated, control) = (pick(Arm::Treatment), pick(Arm::Control));
    if treated.is_empty() || control.is_empty() {
        return Err(Error::InvalidData("both arms must be present".into()));
    }
    let counts = treated
        .par_iter()
        .map(|t| {
            let mut c = Counts::default();
            for x in &control {
                c.record(t, 1.0, x, 0.0, rule);
            }
            c
        })
        .reduce(Counts::default, |a, b| a + b);
    counts.finish(rule)
}
