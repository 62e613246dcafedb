//! Splits a layer's total rate across its sub-layers to minimize the summed
//! delivery rate.
//!
//! Each sub-layer's rate curve is piecewise-linear and convex, so the
//! separable problem under a single sum constraint is solved exactly by
//! slope-ordered water-filling over the segment pool. A numerical convexity
//! check guards the assumption; if it ever fails the solver falls back to a
//! refined grid search.

use crate::error::{Error, Result};
use crate::layer::{sublayer_pl, SubLayerSpec};
use crate::pwl::Pwl;

/// Rates assigned to the sub-layers of one layer, plus the objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRateSolution {
    pub rates: Vec<f64>,
    pub total_rate: f64,
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::invalid(format!("layer budget must be finite and nonnegative, got {budget}")));
    }
    Ok(())
}

/// Minimizes `sum_i rate_i(r_i)` subject to `sum_i r_i = budget`, `r_i >= 0`.
pub fn optimize_layer(specs: &[SubLayerSpec], budget: f64) -> Result<LayerRateSolution> {
    check_budget(budget)?;
    if specs.is_empty() {
        return Err(Error::invalid("no sub-layers to optimize"));
    }
    let pls: Vec<Pwl> = specs.iter().map(sublayer_pl).collect();
    if budget == 0.0 {
        return Ok(LayerRateSolution { rates: vec![0.0; specs.len()], total_rate: 0.0 });
    }

    if pls.iter().all(|pl| pl.is_convex(1e-9)) {
        Ok(greedy_waterfill(&pls, budget))
    } else {
        // Contested corner of the rate formulas: correctness over speed.
        Ok(refined_grid_search(&pls, budget))
    }
}

fn greedy_waterfill(pls: &[Pwl], budget: f64) -> LayerRateSolution {
    // Pool every segment up to the budget; convexity makes global
    // slope-ordering consistent with each function's own segment order.
    let mut pool: Vec<(f64, usize, f64)> = Vec::new(); // (slope, sublayer, width)
    for (idx, pl) in pls.iter().enumerate() {
        for (width, slope) in pl.segments_up_to(budget) {
            pool.push((slope, idx, width));
        }
    }
    // Ties broken toward the lowest sub-layer index for determinism.
    pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut rates = vec![0.0; pls.len()];
    let mut remaining = budget;
    for (_, idx, width) in pool {
        if remaining <= 0.0 {
            break;
        }
        let take = width.min(remaining);
        rates[idx] += take;
        remaining -= take;
    }
    // Segment pools cover the budget (each function alone spans it), so any
    // leftover is floating-point dust; pin the sum exactly.
    if remaining != 0.0 {
        rates[0] += remaining;
    }
    let total_rate = rates.iter().zip(pls).map(|(&r, pl)| pl.eval(r.max(0.0))).sum();
    LayerRateSolution { rates, total_rate }
}

fn eval_sum(pls: &[Pwl], rates: &[f64]) -> f64 {
    rates.iter().zip(pls).map(|(&r, pl)| pl.eval(r)).sum()
}

/// Grid search over the simplex followed by shrinking local refinement.
fn refined_grid_search(pls: &[Pwl], budget: f64) -> LayerRateSolution {
    let steps = 200usize;
    let mut best = grid_search(pls, budget, steps);
    // Pairwise transfers with shrinking step; piecewise-linear objectives
    // cannot trap this far from a grid-adjacent optimum.
    let mut delta = budget / steps as f64;
    for _ in 0..24 {
        let mut improved = true;
        while improved {
            improved = false;
            for from in 0..pls.len() {
                for to in 0..pls.len() {
                    if from == to || best.rates[from] < delta {
                        continue;
                    }
                    let mut cand = best.rates.clone();
                    cand[from] -= delta;
                    cand[to] += delta;
                    let val = eval_sum(pls, &cand);
                    if val < best.total_rate - 1e-15 {
                        best = LayerRateSolution { rates: cand, total_rate: val };
                        improved = true;
                    }
                }
            }
        }
        delta /= 2.0;
        if delta < 1e-12 {
            break;
        }
    }
    best
}

fn grid_search(pls: &[Pwl], budget: f64, steps: usize) -> LayerRateSolution {
    let mut best: Option<LayerRateSolution> = None;
    let mut current = vec![0.0; pls.len()];
    enumerate_simplex(pls, budget, steps, steps, 0, &mut current, &mut best);
    best.unwrap()
}

fn enumerate_simplex(
    pls: &[Pwl],
    budget: f64,
    steps: usize,
    left: usize,
    idx: usize,
    current: &mut Vec<f64>,
    best: &mut Option<LayerRateSolution>,
) {
    let unit = budget / steps as f64;
    if idx == pls.len() - 1 {
        current[idx] = left as f64 * unit;
        let val = eval_sum(pls, current);
        let better = match best {
            Some(b) => val < b.total_rate,
            None => true,
        };
        if better {
            *best = Some(LayerRateSolution { rates: current.clone(), total_rate: val });
        }
        return;
    }
    for take in 0..=left {
        current[idx] = take as f64 * unit;
        enumerate_simplex(pls, budget, steps, left - take, idx + 1, current, best);
    }
}

/// Exhaustive discretized-simplex search; test oracle only.
pub fn brute_force_oracle(
    specs: &[SubLayerSpec],
    budget: f64,
    grid_steps: usize,
) -> Result<LayerRateSolution> {
    check_budget(budget)?;
    if specs.len() > 4 {
        return Err(Error::invalid("brute-force oracle is limited to 4 sub-layers"));
    }
    if specs.is_empty() {
        return Err(Error::invalid("no sub-layers to optimize"));
    }
    if grid_steps < 10 {
        return Err(Error::invalid("grid_steps must be >= 10"));
    }
    let pls: Vec<Pwl> = specs.iter().map(sublayer_pl).collect();
    if budget == 0.0 {
        return Ok(LayerRateSolution { rates: vec![0.0; specs.len()], total_rate: 0.0 });
    }
    Ok(grid_search(&pls, budget, grid_steps))
}

/// Worst marginal cost over the relevant range; bounds the grid error of the
/// oracle as `max_slope * budget / grid_steps`.
pub fn max_slope(specs: &[SubLayerSpec], budget: f64) -> f64 {
    specs
        .iter()
        .flat_map(|s| sublayer_pl(s).segments_up_to(budget.max(1e-9)))
        .map(|(_, slope)| slope)
        .fold(0.0, f64::max)
}
