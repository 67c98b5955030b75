//! Reference implementations used only by tests. They follow the textbook
//! definitions directly and share no code with the library's fast paths.

#![allow(dead_code)]

use hazard_odds::{Arm, SurvivalDataset};

/// Breslow log partial likelihood straight from its definition: for every
/// event, `β z_i - log Σ_{t_j >= t_i} exp(β z_j)`.
pub fn naive_breslow_loglik(data: &SurvivalDataset, beta: f64) -> f64 {
    let obs = data.observations();
    let z = |a: Arm| if a == Arm::Treatment { 1.0 } else { 0.0 };
    let mut total = 0.0;
    for i in obs.iter().filter(|o| o.event) {
        let denom: f64 = obs.iter().filter(|j| j.time >= i.time).map(|j| (beta * z(j.arm)).exp()).sum();
        total += beta * z(i.arm) - denom.ln();
    }
    total
}

/// Maximizes a concave function on `[lo, hi]` by repeated grid refinement.
pub fn grid_search_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut best = lo;
    for _ in 0..12 {
        let steps = 200;
        let width = (hi - lo) / steps as f64;
        let mut best_value = f64::NEG_INFINITY;
        for k in 0..=steps {
            let x = lo + k as f64 * width;
            let v = f(x);
            if v > best_value {
                best_value = v;
                best = x;
            }
        }
        lo = best - width;
        hi = best + width;
    }
    best
}

/// Central finite difference.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub tied: u64,
}

/// Enumerates ordered pairs `(i, j)` with `t_i < t_j`. `both_events` selects
/// the rule requiring both events; otherwise only the earlier one must be an event.
pub fn brute_force_pairs(times: &[f64], events: &[bool], scores: &[f64], both_events: bool) -> PairCounts {
    let mut counts = PairCounts { concordant: 0, discordant: 0, tied: 0 };
    for i in 0..times.len() {
        for j in 0..times.len() {
            if !(times[i] < times[j]) || !events[i] || (both_events && !events[j]) {
                continue;
            }
            if scores[i] > scores[j] {
                counts.concordant += 1;
            } else if scores[i] == scores[j] {
                counts.tied += 1;
            } else {
                counts.discordant += 1;
            }
        }
    }
    counts
}

/// Empirical survival `#{t_i > t} / n`.
pub fn empirical_survival(times: &[f64], t: f64) -> f64 {
    times.iter().filter(|&&x| x > t).count() as f64 / times.len() as f64
}

/// Exponential censoring rate giving the requested overall censored fraction
/// for exponential(1) control and exponential(λ) treatment arms of equal size:
/// solves `(c/(c+1) + c/(c+λ)) / 2 = frac` by bisection.
pub fn censoring_rate_for_fraction(lambda: f64, frac: f64) -> f64 {
    let g = |c: f64| 0.5 * (c / (c + 1.0) + c / (c + lambda)) - frac;
    let (mut lo, mut hi) = (0.0, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
