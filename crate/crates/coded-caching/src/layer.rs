//! Delivery rate of one refinement layer's sub-layer.
//!
//! Layer `k` is wanted by `L_k = K - k + 1` users. Sorting their allocations
//! ascending and taking successive differences yields `L_k` sub-layers in
//! which every caching user holds the same amount `M`; sub-layer `i` has
//! `L^i = L_k - i + 1` caching users and `i - 1` users with no cache.
//!
//! Rates are piecewise-linear in the sub-layer size `r`:
//! - coded delivery: exact corner values at `r = M*L^i/(t*N)` for integer
//!   `t`, linear in between, and a unicast extension of slope
//!   `(i-1) + L^i` beyond the last corner. Corners are evaluated in the
//!   integer parameter `t`, never as the printed ratio form, so zero-size
//!   sub-layers and `r = 0` are division-safe.
//! - coded placement (only competitive when users outnumber files): linear
//!   with slope `N` and gain `M * (N - i + 1)` in its small-cache region
//!   `r >= M*L^i`, completed below by the lower convex envelope through the
//!   coded-delivery corners, and degrading to plain broadcast `N*r` once
//!   `i - 1 >= N`.

use crate::error::{Error, Result};
use crate::pwl::Pwl;

/// One sub-layer: `L^i` users caching `M` each, `i - 1` users with no cache.
#[derive(Debug, Clone, PartialEq)]
pub struct SubLayerSpec {
    /// Users that may request this layer (L_k).
    pub layer_users: usize,
    /// 1-based sub-layer index i.
    pub sublayer_index: usize,
    /// L^i = L_k - i + 1.
    pub cached_users: usize,
    /// Cache allocated by each of the `cached_users`, in bpss.
    pub cache_per_user: f64,
    /// Number of files N.
    pub num_files: usize,
}

impl SubLayerSpec {
    pub fn new(layer_users: usize, sublayer_index: usize, cache_per_user: f64, num_files: usize) -> Result<Self> {
        if layer_users == 0 || num_files == 0 {
            return Err(Error::invalid("layer_users and num_files must be >= 1"));
        }
        if sublayer_index == 0 || sublayer_index > layer_users {
            return Err(Error::invalid(format!(
                "sublayer index {sublayer_index} outside 1..={layer_users}"
            )));
        }
        if !(cache_per_user >= 0.0) || !cache_per_user.is_finite() {
            return Err(Error::invalid("cache_per_user must be finite and nonnegative"));
        }
        Ok(SubLayerSpec {
            layer_users,
            sublayer_index,
            cached_users: layer_users - sublayer_index + 1,
            cache_per_user,
            num_files,
        })
    }
}

/// Cache the users of one layer allocate to it, pre-sorting.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerAllocation {
    /// 1-based layer index k.
    pub layer_index: usize,
    /// Allocation of users k..=K to this layer, in user order.
    pub per_user_cache: Vec<f64>,
}

/// Sorts allocations ascending and converts successive differences into
/// sub-layer specs. The total `sum_i L^i * M^i` equals the allocated cache.
pub fn sublayers_from_allocation(alloc: &LayerAllocation, num_files: usize) -> Result<Vec<SubLayerSpec>> {
    let layer_users = alloc.per_user_cache.len();
    if layer_users == 0 {
        return Err(Error::invalid("layer has no users"));
    }
    if alloc.per_user_cache.iter().any(|m| *m < 0.0 || !m.is_finite()) {
        return Err(Error::invalid("allocations must be finite and nonnegative"));
    }
    let mut sorted = alloc.per_user_cache.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut specs = Vec::with_capacity(layer_users);
    let mut prev = 0.0;
    for (idx, &m) in sorted.iter().enumerate() {
        specs.push(SubLayerSpec::new(layer_users, idx + 1, (m - prev).max(0.0), num_files)?);
        prev = m;
    }
    Ok(specs)
}

/// Coded-delivery rate curve for one sub-layer.
pub fn delivery_pl(spec: &SubLayerSpec) -> Pwl {
    let l_i = spec.cached_users;
    let i = spec.sublayer_index;
    let n = spec.num_files as f64;
    let m = spec.cache_per_user;
    // Beyond the largest corner every extra bit is unicast: L^i distinct
    // requests among cached users plus i-1 uncached users.
    let tail = (i - 1 + l_i) as f64;
    if m <= 0.0 {
        return Pwl::line(0.0, tail);
    }
    let mut pts = vec![(0.0, 0.0)];
    for t in (1..=l_i).rev() {
        let r = m * l_i as f64 / (t as f64 * n);
        let rate = r * ((i - 1) as f64 + (l_i - t) as f64 / (1 + t) as f64);
        pts.push((r, rate));
    }
    Pwl::new(pts, tail)
}

/// Coded-placement rate curve for one sub-layer (meaningful when
/// `L_k >= N`).
pub fn placement_pl(spec: &SubLayerSpec) -> Pwl {
    let i = spec.sublayer_index;
    let n = spec.num_files as f64;
    let m = spec.cache_per_user;
    if i - 1 >= spec.num_files {
        // No gain with either scheme: plain broadcast of everything.
        return Pwl::line(0.0, n);
    }
    let l_i = spec.cached_users as f64;
    if m <= 0.0 {
        return Pwl::line(0.0, n);
    }
    let r_p = m * l_i;
    let rate_p = (n * r_p - m * (n - (i - 1) as f64)).max(0.0);
    let mut points = delivery_pl(spec).points().to_vec();
    points.push((r_p, rate_p));
    Pwl::lower_convex_envelope(&points, n)
}

/// Combined sub-layer rate curve: delivery only when files outnumber the
/// layer's users, otherwise the pointwise min of the two schemes.
pub fn sublayer_pl(spec: &SubLayerSpec) -> Pwl {
    let delivery = delivery_pl(spec);
    if spec.layer_users < spec.num_files {
        delivery
    } else {
        Pwl::min(&delivery, &placement_pl(spec))
    }
}

fn check_rate(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("sub-layer rate must be finite and nonnegative, got {r}")));
    }
    Ok(())
}

pub fn coded_delivery_rate(spec: &SubLayerSpec, r: f64) -> Result<f64> {
    check_rate(r)?;
    Ok(delivery_pl(spec).eval(r))
}

pub fn coded_placement_rate(spec: &SubLayerSpec, r: f64) -> Result<f64> {
    check_rate(r)?;
    Ok(placement_pl(spec).eval(r))
}

pub fn sublayer_rate(spec: &SubLayerSpec, r: f64) -> Result<f64> {
    check_rate(r)?;
    Ok(sublayer_pl(spec).eval(r))
}
