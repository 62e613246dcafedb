//! Cache allocation across refinement layers.
//!
//! Two policies split user k's cache M_k across layers 1..k:
//! - proportional: layer i gets M_k * (r_i - r_{i-1}) / r_k;
//! - ordered: fill layer 1 first at N bits of cache per bit of layer size,
//!   then layer 2, and so on until the cache runs out (or every layer the
//!   user consumes is fully covered; extra cache stays idle).
//!
//! `total_delivery_rate` evaluates an allocation end to end, and
//! `memory_sharing_envelope` combines scheme curves by time sharing.

use crate::error::{Error, Result};
use crate::layer::{sublayers_from_allocation, LayerAllocation};
use crate::opt::optimize_layer;
use crate::rate_model::{CacheProfile, RateProfile};

/// Per-user, per-layer cache split. `entries[k][i]` is what user `k+1` gives
/// layer `i+1`; zero for layers above the user's own quality (i > k).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrix {
    pub entries: Vec<Vec<f64>>,
}

impl AllocationMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let k = entries.len();
        if k == 0 {
            return Err(Error::invalid("allocation matrix is empty"));
        }
        for (row_idx, row) in entries.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(format!(
                    "allocation row {} has {} entries, expected {k}",
                    row_idx + 1,
                    row.len()
                )));
            }
            for (col_idx, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid("allocation entries must be finite and nonnegative"));
                }
                if col_idx > row_idx && v != 0.0 {
                    return Err(Error::invalid(format!(
                        "user {} allocates cache to layer {} above its own quality",
                        row_idx + 1,
                        col_idx + 1
                    )));
                }
            }
        }
        Ok(AllocationMatrix { entries })
    }

    pub fn num_users(&self) -> usize {
        self.entries.len()
    }

    pub fn row_sum(&self, user: usize) -> f64 {
        self.entries[user].iter().sum()
    }
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

/// Proportional allocation: layer shares follow the layer size shares of the
/// user's own rate. A user with cache but zero rate parks everything in
/// layer 1 (the layer has zero size, so the cache is idle either way).
pub fn pca(cache: &CacheProfile, rates: &RateProfile) -> Result<AllocationMatrix> {
    let k = check_profiles(cache, rates)?;
    let mut entries = vec![vec![0.0; k]; k];
    for user in 0..k {
        let m = cache.capacities[user];
        if m == 0.0 {
            continue;
        }
        let r = rates.rates[user];
        if r == 0.0 {
            entries[user][0] = m;
            continue;
        }
        let mut given = 0.0;
        for layer in 0..user {
            let v = m * rates.increments[layer] / r;
            entries[user][layer] = v;
            given += v;
        }
        // last share by remainder so the row sums to M_k exactly
        entries[user][user] = m - given;
    }
    AllocationMatrix::new(entries)
}

/// Ordered allocation: fill the lowest layers first, N * layer_size cache
/// per layer; whatever exceeds full coverage of the user's own layers is
/// left idle.
pub fn oca(cache: &CacheProfile, rates: &RateProfile, num_files: usize) -> Result<AllocationMatrix> {
    let k = check_profiles(cache, rates)?;
    if num_files == 0 {
        return Err(Error::invalid("num_files must be >= 1"));
    }
    let n = num_files as f64;
    let mut entries = vec![vec![0.0; k]; k];
    for user in 0..k {
        let mut remaining = cache.capacities[user];
        for layer in 0..=user {
            if remaining <= 0.0 {
                break;
            }
            let take = remaining.min(n * rates.increments[layer]);
            entries[user][layer] = take;
            remaining -= take;
        }
    }
    AllocationMatrix::new(entries)
}

/// Worst-case delivery rate of an allocation: each layer is solved as its own
/// caching subproblem with rate budget equal to the layer size, and the layer
/// optima add up.
pub fn total_delivery_rate(alloc: &AllocationMatrix, rates: &RateProfile, num_files: usize) -> Result<f64> {
    let k = rates.num_users();
    if alloc.num_users() != k {
        return Err(Error::invalid(format!(
            "allocation matrix has {} users, rate profile has {k}",
            alloc.num_users()
        )));
    }
    let mut total = 0.0;
    for layer in 0..k {
        let per_user_cache: Vec<f64> = (layer..k).map(|u| alloc.entries[u][layer]).collect();
        let layer_alloc = LayerAllocation { layer_index: layer + 1, per_user_cache };
        let specs = sublayers_from_allocation(&layer_alloc, num_files)?;
        total += optimize_layer(&specs, rates.increments[layer])?.total_rate;
    }
    Ok(total)
}

/// A named rate-vs-cache curve sampled on a cache-capacity axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub scheme: String,
    /// (cache capacity, delivery rate) samples, capacity strictly increasing.
    pub points: Vec<(f64, f64)>,
}

const AXIS_EPS: f64 = 1e-9;

/// Time sharing between schemes: pointwise min of the curves, then the lower
/// convex hull over the capacity axis, resampled on that axis.
pub fn memory_sharing_envelope(curves: &[RateCurve]) -> Result<RateCurve> {
    let first = curves.first().ok_or_else(|| Error::invalid("no curves to combine"))?;
    let axis: Vec<f64> = first.points.iter().map(|p| p.0).collect();
    if axis.is_empty() {
        return Err(Error::invalid("curves have no sample points"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("curve axis must be strictly increasing"));
    }
    for c in &curves[1..] {
        if c.points.len() != axis.len()
            || c.points.iter().zip(&axis).any(|(p, &x)| (p.0 - x).abs() > AXIS_EPS)
        {
            return Err(Error::invalid(format!(
                "curve '{}' is sampled on a different cache axis",
                c.scheme
            )));
        }
    }

    let min_pts: Vec<(f64, f64)> = (0..axis.len())
        .map(|i| (axis[i], curves.iter().map(|c| c.points[i].1).fold(f64::INFINITY, f64::min)))
        .collect();

    // lower hull by monotone chain over the (already x-sorted) samples
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &min_pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let eval_hull = |x: f64| -> f64 {
        let hi = hull.partition_point(|p| p.0 <= x);
        if hi == 0 {
            return hull[0].1;
        }
        if hi == hull.len() {
            return hull[hull.len() - 1].1;
        }
        let (x0, y0) = hull[hi - 1];
        let (x1, y1) = hull[hi];
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    };

    Ok(RateCurve {
        scheme: "envelope".to_string(),
        points: axis.iter().map(|&x| (x, eval_hull(x))).collect(),
    })
}
