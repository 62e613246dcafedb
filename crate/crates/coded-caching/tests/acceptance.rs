//! End-to-end acceptance gate: one test per release criterion, each printing
//! a single PASS/FAIL line (visible with `cargo test --test acceptance --
//! --nocapture`).

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use coded_caching::layer::SubLayerSpec;
use coded_caching::opt::{brute_force_oracle, max_slope, optimize_layer};
use coded_caching::rate_model::{CacheProfile, DemandVector, RateProfile};
use coded_caching::scenario::{check_dominance, emit_csv, emit_json, run_scenario, ScenarioConfig};
use coded_caching::{alloc, bounds, pair, simkit};

fn report(number: usize, name: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("[acceptance] criterion {number} ({name}): PASS"),
        Err(msg) => {
            println!("[acceptance] criterion {number} ({name}): FAIL — {msg}");
            panic!("criterion {number} ({name}) failed: {msg}");
        }
    }
}

fn criterion_1() -> Result<(), String> {
    let n = 10_000usize;
    let tol = 8.0 / n as f64;
    let demands = [[1, 1], [1, 2], [2, 1], [2, 2]];
    let mut seed = 0u64;
    for &(r1, r2) in &[(1.0f64, 2.0f64), (1.0, 1.0), (0.5, 2.0)] {
        let hi = 2.0 * r2 + 1.0;
        let steps = (hi / 0.05).round() as usize;
        for i1 in 0..=steps {
            let m1 = i1 as f64 * 0.05;
            for i2 in 0..=steps {
                let m2 = i2 as f64 * 0.05;
                let opt = pair::optimal_rate(m1, m2, r1, r2).map_err(|e| e.to_string())?;
                let mut worst = 0.0f64;
                for d in demands {
                    seed = seed.wrapping_add(1);
                    let demand = DemandVector::new(d.to_vec(), 2).unwrap();
                    let sim = pair::simulate_pair(n, m1, m2, r1, r2, &demand, seed)
                        .map_err(|e| format!("M=({m1},{m2}) r=({r1},{r2}) d={d:?}: {e}"))?;
                    if !sim.decode_ok {
                        return Err(format!("decode failed at M=({m1},{m2}) r=({r1},{r2}) d={d:?}"));
                    }
                    let rate = sim.transmitted_bits as f64 / n as f64;
                    // no demand may cost more than the worst-case optimum
                    if rate > opt + tol {
                        return Err(format!(
                            "rate {rate} above optimum {opt} at M=({m1},{m2}) r=({r1},{r2}) d={d:?}"
                        ));
                    }
                    worst = worst.max(rate);
                }
                // the worst demand must cost the full optimum (equal demands
                // legitimately cost less)
                if worst < opt - 1e-9 {
                    return Err(format!(
                        "worst demand rate {worst} below optimum {opt} at M=({m1},{m2}) r=({r1},{r2})"
                    ));
                }
            }
        }
    }
    Ok(())
}

#[test]
fn acceptance_1_two_user_optimality() {
    report(1, "two-user optimality", criterion_1());
}

fn criterion_2() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(0xACCE);
    for trial in 0..100_000 {
        let r1 = rng.gen_range(0.0..3.0);
        let r2 = r1 + rng.gen_range(0.0..3.0);
        let m1 = rng.gen_range(0.0..2.0 * r2 + 1.0);
        let m2 = rng.gen_range(0.0..2.0 * r2 + 1.0);
        let case = pair::classify_case(m1, m2, r1, r2)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        let by_case = pair::case_formula_rate(case, m1, m2, r1, r2);
        let by_max = pair::optimal_rate(m1, m2, r1, r2).unwrap();
        if (by_case - by_max).abs() > 1e-12 {
            return Err(format!(
                "case {case} formula {by_case} != max {by_max} at M=({m1},{m2}) r=({r1},{r2})"
            ));
        }
    }

    // Continuity across each regime boundary: the case formula on both sides
    // must still equal the five-term max, and the rates a hair apart must be
    // a hair apart.
    let eps = 1e-7;
    for trial in 0..1000 {
        let r1: f64 = rng.gen_range(0.1..3.0);
        let r2 = r1 + rng.gen_range(0.0..3.0);
        // (m1, m2, perturb m1?) on one of the six regime boundaries
        let (m1, m2, vary_m1) = match trial % 6 {
            0 => {
                let m1 = rng.gen_range(0.0..r1);
                (m1, r1 - m1, false)
            }
            1 => (r1, rng.gen_range(0.0..(2.0 * r2 - r1).max(1e-9)), true),
            2 => (rng.gen_range(0.0..r1), 2.0 * r2 - r1, false),
            3 => {
                let m1 = rng.gen_range(r1..2.0 * r1);
                (m1, m1 + 2.0 * (r2 - r1), true)
            }
            4 => (2.0 * r1, rng.gen_range(2.0 * r2..2.0 * r2 + 2.0), true),
            _ => (rng.gen_range(2.0 * r1..2.0 * r1 + 2.0), 2.0 * r2, false),
        };
        let mut rates = [0.0; 2];
        for (side, delta) in [(0usize, -eps), (1usize, eps)] {
            let (p1, p2) = if vary_m1 { (m1 + delta, m2) } else { (m1, m2 + delta) };
            let (p1, p2) = (p1.max(0.0), p2.max(0.0));
            let case = pair::classify_case(p1, p2, r1, r2).map_err(|e| e.to_string())?;
            let by_case = pair::case_formula_rate(case, p1, p2, r1, r2);
            let by_max = pair::optimal_rate(p1, p2, r1, r2).unwrap();
            if (by_case - by_max).abs() > 1e-12 {
                return Err(format!(
                    "boundary trial {trial}: case {case} formula {by_case} != max {by_max} \
                     at M=({p1},{p2}) r=({r1},{r2})"
                ));
            }
            rates[side] = by_case;
        }
        if (rates[0] - rates[1]).abs() > 10.0 * eps {
            return Err(format!(
                "discontinuity {} vs {} near M=({m1},{m2}) r=({r1},{r2})",
                rates[0], rates[1]
            ));
        }
    }
    Ok(())
}

#[test]
fn acceptance_2_case_form_consistency() {
    report(2, "two-user case-form consistency", criterion_2());
}

fn criterion_3() -> Result<(), String> {
    let n = 20_000usize;
    let mut seed = 100u64;
    for num_files in 1..=5usize {
        for i in 1..=3usize {
            for cached in 1..=5usize {
                let layer_users = cached + i - 1;
                for &m in &[0.6, 1.7] {
                    let spec = SubLayerSpec::new(layer_users, i, m, num_files)
                        .map_err(|e| e.to_string())?;
                    for t in 1..=cached {
                        seed = seed.wrapping_add(1);
                        let ok = simkit::verify_corner(&spec, t, n, seed)
                            .map_err(|e| format!("L^i={cached} i={i} N={num_files} t={t}: {e}"))?;
                        if !ok {
                            return Err(format!(
                                "corner mismatch at L^i={cached} i={i} N={num_files} t={t} M={m}"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[test]
fn acceptance_3_delivery_corner_fidelity() {
    report(3, "coded-delivery corner fidelity", criterion_3());
}

fn criterion_4() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(0x09717);
    let grid_steps = 200usize;
    for trial in 0..500 {
        let count = rng.gen_range(1..=3usize);
        let l_k = rng.gen_range(count..=count + 4);
        let n = rng.gen_range(1..=8usize);
        let specs: Vec<SubLayerSpec> = (0..count)
            .map(|j| SubLayerSpec::new(l_k, j + 1, rng.gen_range(0.0..3.0), n).unwrap())
            .collect();
        let budget = rng.gen_range(0.0..4.0);
        let sol = optimize_layer(&specs, budget).map_err(|e| e.to_string())?;
        let oracle = brute_force_oracle(&specs, budget, grid_steps).map_err(|e| e.to_string())?;
        let grid_err = max_slope(&specs, budget) * budget / grid_steps as f64 + 1e-9;
        if sol.total_rate > oracle.total_rate + 1e-9 {
            return Err(format!(
                "trial {trial}: optimizer {} above oracle {}",
                sol.total_rate, oracle.total_rate
            ));
        }
        if oracle.total_rate > sol.total_rate + grid_err {
            return Err(format!(
                "trial {trial}: optimizer {} beats oracle {} beyond grid error {grid_err}",
                sol.total_rate, oracle.total_rate
            ));
        }
    }
    Ok(())
}

#[test]
fn acceptance_4_optimizer_exactness() {
    report(4, "layer optimizer exactness", criterion_4());
}

fn sweep_scenario(cache: &str) -> Vec<alloc::RateCurve> {
    let text = format!(
        "files = 10\nusers = 10\nrates = 1,2,3,4,5,6,7,8,9,10\ncache = {cache}\n\
         sweep = 0:1:100\nschemes = pca,oca,envelope,uncoded,cutset\n"
    );
    let config = ScenarioConfig::parse(&text).unwrap();
    run_scenario(&config).unwrap()
}

fn curve<'a>(curves: &'a [alloc::RateCurve], name: &str) -> &'a alloc::RateCurve {
    curves.iter().find(|c| c.scheme == name).unwrap()
}

fn criterion_5() -> Result<(), String> {
    let curves = sweep_scenario("identical");
    for c in &curves {
        let at_zero = c.points[0].1;
        if (at_zero - 55.0).abs() > 1e-9 {
            return Err(format!("{} at M=0 is {at_zero}, want 55.0", c.scheme));
        }
        if c.scheme != "cutset" {
            let at_full = c.points.last().unwrap().1;
            if at_full.abs() > 1e-9 {
                return Err(format!("{} at M=100 is {at_full}, want 0", c.scheme));
            }
        }
        for w in c.points.windows(2) {
            if w[1].1 > w[0].1 + 1e-9 {
                return Err(format!("{} increases at M={}", c.scheme, w[1].0));
            }
        }
    }
    let pca = curve(&curves, "pca");
    let oca = curve(&curves, "oca");
    let oca_wins = pca.points.iter().zip(&oca.points).position(|(p, o)| o.1 < p.1 - 1e-9);
    let pca_wins = pca.points.iter().zip(&oca.points).rposition(|(p, o)| p.1 < o.1 - 1e-9);
    match (oca_wins, pca_wins) {
        (Some(lo), Some(hi)) if lo < hi => Ok(()),
        _ => Err(format!("no crossover: oca wins first at {oca_wins:?}, pca last at {pca_wins:?}")),
    }
}

#[test]
fn acceptance_5_identical_cache_scenario() {
    report(5, "identical-cache sweep anchors", criterion_5());
}

fn criterion_6() -> Result<(), String> {
    let curves = sweep_scenario("scaled 0.2");
    check_dominance(&curves).map_err(|e| e.to_string())?;
    let pca = curve(&curves, "pca");
    let oca = curve(&curves, "oca");
    let envelope = curve(&curves, "envelope");
    let uncoded = curve(&curves, "uncoded");
    for i in 0..pca.points.len() {
        let min_po = pca.points[i].1.min(oca.points[i].1);
        if envelope.points[i].1 > min_po + 1e-9 {
            return Err(format!("envelope above min(pca,oca) at M={}", pca.points[i].0));
        }
        if min_po > uncoded.points[i].1 + 1e-9 {
            return Err(format!("min(pca,oca) above uncoded at M={}", pca.points[i].0));
        }
    }
    // Beyond some threshold the proportional split must win at every sample.
    let threshold = pca
        .points
        .iter()
        .zip(&oca.points)
        .rposition(|(p, o)| p.1 > o.1 + 1e-9)
        .map(|i| i + 1)
        .unwrap_or(0);
    if threshold + 1 >= pca.points.len() {
        return Err("pca never dominates oca on a tail of the sweep".into());
    }
    Ok(())
}

#[test]
fn acceptance_6_scaled_cache_scenario() {
    report(6, "scaled-cache sweep dominance", criterion_6());
}

fn criterion_7() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(0xB0DD);
    for trial in 0..1000 {
        let k = rng.gen_range(1..=10usize);
        let n = rng.gen_range(1..=10usize);
        let mut rs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..4.0)).collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ms: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..6.0)).collect();
        let rp = RateProfile::from_rates(&rs).unwrap();
        let cp = CacheProfile::new(ms.clone()).unwrap();
        let lo = bounds::cutset_bound(&cp, &rp, n).map_err(|e| e.to_string())?.value;

        let mut achievable = vec![
            ("uncoded", bounds::uncoded_rate(&cp, &rp, n).unwrap()),
            (
                "pca",
                alloc::total_delivery_rate(&alloc::pca(&cp, &rp).unwrap(), &rp, n).unwrap(),
            ),
            (
                "oca",
                alloc::total_delivery_rate(&alloc::oca(&cp, &rp, n).unwrap(), &rp, n).unwrap(),
            ),
        ];
        if k == 2 && n == 2 {
            achievable.push(("pair-optimal", pair::optimal_rate(ms[0], ms[1], rs[0], rs[1]).unwrap()));
        }
        for (name, rate) in achievable {
            if lo > rate + 1e-9 {
                return Err(format!(
                    "trial {trial}: cutset {lo} above {name} {rate} (K={k}, N={n}, r={rs:?}, M={ms:?})"
                ));
            }
        }
    }
    Ok(())
}

#[test]
fn acceptance_7_bound_sandwich() {
    report(7, "cut-set bound sandwich", criterion_7());
}

fn criterion_8() -> Result<(), String> {
    // Corrupted caches must break bit-exact decoding.
    let demand = DemandVector::new(vec![1, 2], 2).unwrap();
    for &(m1, m2) in &[(0.5, 1.0), (1.5, 1.5), (1.0, 3.0)] {
        let sim = pair::simulate_pair_sabotaged(4000, m1, m2, 1.0, 2.0, &demand, 77)
            .map_err(|e| e.to_string())?;
        if sim.decode_ok {
            return Err(format!("sabotaged two-user sim decoded at M=({m1},{m2})"));
        }
    }
    let files = simkit::make_files(3, 5000, 1.0, 3).unwrap();
    let sim = simkit::man_coded_delivery_sim_sabotaged(3, 1, 1.0, 5000, &files, &[1, 2, 3])
        .map_err(|e| e.to_string())?;
    if sim.decode_ok {
        return Err("sabotaged coded-delivery sim decoded".into());
    }

    // Unsorted distortions are a caller error, not silently reordered.
    if RateProfile::from_distortions(1.0, &[0.25, 0.5]).is_ok() {
        return Err("unsorted distortions were accepted".into());
    }

    // Identical configs must produce byte-identical CSV and JSON.
    let text = "files = 10\nusers = 10\nrates = 1,2,3,4,5,6,7,8,9,10\ncache = scaled 0.2\n\
                sweep = 0:5:50\nschemes = pca,oca,envelope,uncoded,cutset\n";
    let runs: Vec<(String, String)> = (0..2)
        .map(|_| {
            let config = ScenarioConfig::parse(text).unwrap();
            let curves = run_scenario(&config).unwrap();
            (emit_csv(&curves), emit_json(&curves))
        })
        .collect();
    if runs[0] != runs[1] {
        return Err("repeated runs produced different bytes".into());
    }
    Ok(())
}

#[test]
fn acceptance_8_negative_controls_and_stability() {
    report(8, "negative controls and output stability", criterion_8());
}
