//! Cut-set lower bound and the uncoded-caching baseline.

use crate::error::{Error, Result};
use crate::rate_model::{CacheProfile, RateProfile};

/// Cut-set bound value with the subset that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub value: f64,
    pub argmax_s: usize,
    /// 1-based user indices, |argmax_users| == argmax_s.
    pub argmax_users: Vec<usize>,
}

fn check_profiles(cache: &CacheProfile, rates: &RateProfile) -> Result<usize> {
    let k = rates.num_users();
    if cache.num_users() != k {
        return Err(Error::invalid(format!(
            "cache profile has {} users, rate profile has {k}",
            cache.num_users()
        )));
    }
    Ok(k)
}

/// Max over cut sizes s and user subsets U of |U| = s of
/// `sum_{k in U} (r_k - M_k / floor(N/s))`, clamped at zero. Cut sizes above
/// N are excluded (no fresh file remains for an extra request round). For
/// each s the optimum subset is the top-s of the per-user terms, so no
/// subset enumeration is needed.
pub fn cutset_bound(cache: &CacheProfile, rates: &RateProfile, num_files: usize) -> Result<BoundReport> {
    let k = check_profiles(cache, rates)?;
    if num_files == 0 {
        return Err(Error::invalid("num_files must be >= 1"));
    }
    let mut best = BoundReport { value: 0.0, argmax_s: 1, argmax_users: vec![1] };
    let mut first = true;
    for s in 1..=k.min(num_files) {
        let rounds = (num_files / s) as f64;
        let mut terms: Vec<(f64, usize)> = (0..k)
            .map(|u| (rates.rates[u] - cache.capacities[u] / rounds, u + 1))
            .collect();
        terms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let value: f64 = terms[..s].iter().map(|t| t.0).sum();
        if first || value > best.value {
            first = false;
            let mut users: Vec<usize> = terms[..s].iter().map(|t| t.1).collect();
            users.sort_unstable();
            best = BoundReport { value, argmax_s: s, argmax_users: users };
        }
    }
    best.value = best.value.max(0.0);
    Ok(best)
}

/// Demand-oblivious baseline: every user caches the first
/// `min(M_k / N, r_k)` bits of each file's description uncoded, and misses
/// are unicast.
pub fn uncoded_rate(cache: &CacheProfile, rates: &RateProfile, num_files: usize) -> Result<f64> {
    let k = check_profiles(cache, rates)?;
    if num_files == 0 {
        return Err(Error::invalid("num_files must be >= 1"));
    }
    let n = num_files as f64;
    Ok((0..k)
        .map(|u| {
            let cached = (cache.capacities[u] / n).min(rates.rates[u]);
            (rates.rates[u] - cached).max(0.0)
        })
        .sum())
}
