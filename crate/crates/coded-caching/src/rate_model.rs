//! Source model and rate-distortion conversion shared by all other modules.
//!
//! Files are i.i.d. zero-mean Gaussian vectors with variance `sigma2`; a user
//! with squared-error distortion target `D` needs `R(D) = max(0, log2(sigma2/D)/2)`
//! bits per source sample (bpss) of its requested file. Users are ordered by
//! decreasing distortion target, which makes per-user rates nondecreasing and
//! induces the refinement-layer structure used by the caching schemes.

use crate::error::{Error, Result};

/// Global system parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of files in the server database (N).
    pub num_files: usize,
    /// Number of users (K).
    pub num_users: usize,
    /// Source variance per sample.
    pub sigma2: f64,
    /// Samples per file; only bit-level simulations quantize at this length.
    pub block_len: usize,
}

impl SystemConfig {
    pub fn new(num_files: usize, num_users: usize, sigma2: f64, block_len: usize) -> Result<Self> {
        if num_files == 0 {
            return Err(Error::invalid("num_files must be >= 1"));
        }
        if num_users == 0 {
            return Err(Error::invalid("num_users must be >= 1"));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        if block_len == 0 {
            return Err(Error::invalid("block_len must be >= 1"));
        }
        Ok(SystemConfig { num_files, num_users, sigma2, block_len })
    }
}

/// Gaussian rate-distortion function, clamped to zero for `d >= sigma2`.
pub fn rate_of_distortion(sigma2: f64, d: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("distortion must be positive, got {d}")));
    }
    Ok((0.5 * (sigma2 / d).log2()).max(0.0))
}

/// Per-user distortion targets with the derived rates and layer increments.
///
/// Users are indexed so that `distortions` is nonincreasing; `rates[k]` is the
/// minimum description rate for user `k+1` and `increments[k]` the size of
/// refinement layer `k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    pub distortions: Vec<f64>,
    pub rates: Vec<f64>,
    pub increments: Vec<f64>,
}

impl RateProfile {
    /// Builds a profile from distortion targets. Rejects unsorted input rather
    /// than silently sorting: the caller controls user identity and order.
    pub fn from_distortions(sigma2: f64, distortions: &[f64]) -> Result<Self> {
        if distortions.is_empty() {
            return Err(Error::invalid("distortion list is empty"));
        }
        for (i, w) in distortions.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(Error::invalid(format!(
                    "distortions must be nonincreasing; index {} ({}) exceeds index {} ({})",
                    i + 1,
                    w[1],
                    i,
                    w[0]
                )));
            }
        }
        let rates = distortions
            .iter()
            .map(|&d| rate_of_distortion(sigma2, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_sorted_rates(distortions.to_vec(), rates))
    }

    /// Builds a profile directly from nondecreasing rates. Distortions are
    /// back-computed for a unit-variance source.
    pub fn from_rates(rates: &[f64]) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("rate list is empty"));
        }
        for (i, w) in rates.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::invalid(format!(
                    "rates must be nondecreasing; index {} ({}) is below index {} ({})",
                    i + 1,
                    w[1],
                    i,
                    w[0]
                )));
            }
        }
        if rates.iter().any(|r| *r < 0.0 || !r.is_finite()) {
            return Err(Error::invalid("rates must be finite and nonnegative"));
        }
        let distortions = rates.iter().map(|&r| (-2.0 * r).exp2()).collect();
        Ok(Self::from_sorted_rates(distortions, rates.to_vec()))
    }

    fn from_sorted_rates(distortions: Vec<f64>, rates: Vec<f64>) -> Self {
        let mut increments = Vec::with_capacity(rates.len());
        let mut prev = 0.0;
        for &r in &rates {
            // Clamp tiny negative noise from the log2 conversion.
            increments.push((r - prev).max(0.0));
            prev = r;
        }
        RateProfile { distortions, rates, increments }
    }

    pub fn num_users(&self) -> usize {
        self.rates.len()
    }

    /// Highest per-user rate (the full description size r_K).
    pub fn top_rate(&self) -> f64 {
        *self.rates.last().unwrap()
    }
}

/// Checks the profile length against the system configuration.
pub fn build_rate_profile(config: &SystemConfig, distortions: &[f64]) -> Result<RateProfile> {
    if distortions.len() != config.num_users {
        return Err(Error::invalid(format!(
            "expected {} distortion targets, got {}",
            config.num_users,
            distortions.len()
        )));
    }
    RateProfile::from_distortions(config.sigma2, distortions)
}

/// Per-user cache capacities in bpss.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheProfile {
    pub capacities: Vec<f64>,
}

impl CacheProfile {
    pub fn new(capacities: Vec<f64>) -> Result<Self> {
        if capacities.iter().any(|m| *m < 0.0 || !m.is_finite()) {
            return Err(Error::invalid("cache capacities must be finite and nonnegative"));
        }
        Ok(CacheProfile { capacities })
    }

    pub fn num_users(&self) -> usize {
        self.capacities.len()
    }
}

/// One file index per user, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandVector {
    pub demands: Vec<usize>,
}

impl DemandVector {
    pub fn new(demands: Vec<usize>, num_files: usize) -> Result<Self> {
        for (k, &d) in demands.iter().enumerate() {
            if d == 0 || d > num_files {
                return Err(Error::invalid(format!(
                    "demand of user {} is {}, outside 1..={}",
                    k + 1,
                    d,
                    num_files
                )));
            }
        }
        Ok(DemandVector { demands })
    }
}
