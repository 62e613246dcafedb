//! Experiment configs, sweep execution, and curve output.
//!
//! Configs are flat `key = value` text (see README for the grammar); outputs
//! are CSV (`scheme,M,rate`) and JSON, both printed with 9 significant digits
//! so repeated runs are byte-identical.

use std::fmt::Write as _;

use crate::alloc::{memory_sharing_envelope, oca, pca, total_delivery_rate, RateCurve};
use crate::bounds::{cutset_bound, uncoded_rate};
use crate::error::{Error, Result};
use crate::pair;
use crate::rate_model::{CacheProfile, RateProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    PairOptimal,
    Pca,
    Oca,
    Envelope,
    Uncoded,
    Cutset,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::PairOptimal => "pair-optimal",
            Scheme::Pca => "pca",
            Scheme::Oca => "oca",
            Scheme::Envelope => "envelope",
            Scheme::Uncoded => "uncoded",
            Scheme::Cutset => "cutset",
        }
    }

    fn parse(s: &str) -> Result<Scheme> {
        match s {
            "pair-optimal" => Ok(Scheme::PairOptimal),
            "pca" => Ok(Scheme::Pca),
            "oca" => Ok(Scheme::Oca),
            "envelope" => Ok(Scheme::Envelope),
            "uncoded" => Ok(Scheme::Uncoded),
            "cutset" => Ok(Scheme::Cutset),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// How per-user capacities derive from the sweep parameter M.
#[derive(Debug, Clone, PartialEq)]
pub enum CacheModel {
    /// Every user gets M.
    Identical,
    /// User k gets factor * k * M.
    Scaled(f64),
    /// User k gets weights[k] * M.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    Rates(Vec<f64>),
    Distortions { sigma2: f64, targets: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_files: usize,
    pub num_users: usize,
    pub rate_spec: RateSpec,
    pub cache_model: CacheModel,
    pub sweep: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub block_len: usize,
    pub seed: u64,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::invalid(format!("bad value for '{key}': '{v}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<f64>(key, s))
        .collect()
}

/// A sweep is either an explicit list or `start:step:stop` (inclusive).
fn parse_sweep(v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("sweep range must be start:step:stop, got '{v}'")));
        }
        let start: f64 = parse_num("sweep", parts[0].trim())?;
        let step: f64 = parse_num("sweep", parts[1].trim())?;
        let stop: f64 = parse_num("sweep", parts[2].trim())?;
        if !(step > 0.0) {
            return Err(Error::invalid("sweep step must be positive"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| start + i as f64 * step).collect());
    }
    parse_list("sweep", v)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        let mut files = None;
        let mut users = None;
        let mut rates: Option<Vec<f64>> = None;
        let mut distortions: Option<Vec<f64>> = None;
        let mut sigma2: Option<f64> = None;
        let mut cache: Option<CacheModel> = None;
        let mut sweep: Option<Vec<f64>> = None;
        let mut schemes: Option<Vec<Scheme>> = None;
        let mut block_len = 10_000usize;
        let mut seed = 0u64;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("line {}: expected 'key = value', got '{line}'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "files" => files = Some(parse_num(key, value)?),
                "users" => users = Some(parse_num(key, value)?),
                "rates" => rates = Some(parse_list(key, value)?),
                "distortions" => distortions = Some(parse_list(key, value)?),
                "sigma2" => sigma2 = Some(parse_num(key, value)?),
                "cache" => {
                    let mut it = value.splitn(2, char::is_whitespace);
                    let kind = it.next().unwrap_or("");
                    let rest = it.next().unwrap_or("").trim();
                    cache = Some(match kind {
                        "identical" => CacheModel::Identical,
                        "scaled" => CacheModel::Scaled(parse_num("cache scaled", rest)?),
                        "explicit" => CacheModel::Explicit(parse_list("cache explicit", rest)?),
                        other => {
                            return Err(Error::invalid(format!(
                                "cache must be identical|scaled <c>|explicit <list>, got '{other}'"
                            )))
                        }
                    });
                }
                "sweep" => sweep = Some(parse_sweep(value)?),
                "schemes" => {
                    schemes = Some(
                        value
                            .split(|c: char| c == ',' || c.is_whitespace())
                            .filter(|s| !s.is_empty())
                            .map(Scheme::parse)
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "block_len" => block_len = parse_num(key, value)?,
                "seed" => seed = parse_num(key, value)?,
                other => return Err(Error::invalid(format!("unknown config key '{other}'"))),
            }
        }

        let num_files = files.ok_or_else(|| Error::invalid("config is missing 'files'"))?;
        let num_users = users.ok_or_else(|| Error::invalid("config is missing 'users'"))?;
        let rate_spec = match (rates, distortions) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("give either 'rates' or 'distortions', not both"))
            }
            (Some(r), None) => RateSpec::Rates(r),
            (None, Some(d)) => RateSpec::Distortions {
                sigma2: sigma2.ok_or_else(|| Error::invalid("'distortions' requires 'sigma2'"))?,
                targets: d,
            },
            (None, None) => return Err(Error::invalid("config needs 'rates' or 'distortions'")),
        };
        let config = ScenarioConfig {
            num_files,
            num_users,
            rate_spec,
            cache_model: cache.unwrap_or(CacheModel::Identical),
            sweep: sweep.ok_or_else(|| Error::invalid("config is missing 'sweep'"))?,
            schemes: schemes.ok_or_else(|| Error::invalid("config is missing 'schemes'"))?,
            block_len,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.num_files == 0 || self.num_users == 0 {
            return Err(Error::invalid("files and users must be >= 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("scheme list must not be empty"));
        }
        if self.sweep.iter().any(|m| *m < 0.0 || !m.is_finite()) {
            return Err(Error::invalid("sweep values must be finite and nonnegative"));
        }
        if self.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sweep values must be strictly increasing"));
        }
        if self.block_len == 0 {
            return Err(Error::invalid("block_len must be >= 1"));
        }
        if let CacheModel::Explicit(w) = &self.cache_model {
            if w.len() != self.num_users {
                return Err(Error::invalid(format!(
                    "explicit cache weights have {} entries, expected {}",
                    w.len(),
                    self.num_users
                )));
            }
            if w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                return Err(Error::invalid("cache weights must be finite and nonnegative"));
            }
        }
        if let CacheModel::Scaled(c) = self.cache_model {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::invalid("cache scale factor must be finite and nonnegative"));
            }
        }
        self.rate_profile()?;
        Ok(())
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "files = {}", self.num_files);
        let _ = writeln!(out, "users = {}", self.num_users);
        match &self.rate_spec {
            RateSpec::Rates(r) => {
                let _ = writeln!(out, "rates = {}", join_floats(r));
            }
            RateSpec::Distortions { sigma2, targets } => {
                let _ = writeln!(out, "sigma2 = {sigma2}");
                let _ = writeln!(out, "distortions = {}", join_floats(targets));
            }
        }
        match &self.cache_model {
            CacheModel::Identical => {
                let _ = writeln!(out, "cache = identical");
            }
            CacheModel::Scaled(c) => {
                let _ = writeln!(out, "cache = scaled {c}");
            }
            CacheModel::Explicit(w) => {
                let _ = writeln!(out, "cache = explicit {}", join_floats(w));
            }
        }
        let _ = writeln!(out, "sweep = {}", join_floats(&self.sweep));
        let labels: Vec<&str> = self.schemes.iter().map(|s| s.label()).collect();
        let _ = writeln!(out, "schemes = {}", labels.join(","));
        let _ = writeln!(out, "block_len = {}", self.block_len);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    pub fn rate_profile(&self) -> Result<RateProfile> {
        let profile = match &self.rate_spec {
            RateSpec::Rates(r) => RateProfile::from_rates(r)?,
            RateSpec::Distortions { sigma2, targets } => {
                RateProfile::from_distortions(*sigma2, targets)?
            }
        };
        if profile.num_users() != self.num_users {
            return Err(Error::invalid(format!(
                "rate spec has {} entries, expected {} users",
                profile.num_users(),
                self.num_users
            )));
        }
        Ok(profile)
    }

    /// Per-user capacities at sweep value `m`.
    pub fn cache_at(&self, m: f64) -> Result<CacheProfile> {
        let caps = match &self.cache_model {
            CacheModel::Identical => vec![m; self.num_users],
            CacheModel::Scaled(c) => (1..=self.num_users).map(|k| c * k as f64 * m).collect(),
            CacheModel::Explicit(w) => w.iter().map(|&x| x * m).collect(),
        };
        CacheProfile::new(caps)
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Evaluates every requested scheme over the sweep. Deterministic; one curve
/// per scheme in the requested order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<RateCurve>> {
    let rp = config.rate_profile()?;
    let n = config.num_files;

    if config.schemes.contains(&Scheme::PairOptimal)
        && (config.num_users != 2 || config.num_files != 2)
    {
        return Err(Error::invalid("the pair-optimal scheme requires exactly 2 files and 2 users"));
    }

    let needs_pca = config.schemes.iter().any(|s| matches!(s, Scheme::Pca | Scheme::Envelope));
    let needs_oca = config.schemes.iter().any(|s| matches!(s, Scheme::Oca | Scheme::Envelope));

    let mut pca_curve = RateCurve { scheme: "pca".into(), points: Vec::new() };
    let mut oca_curve = RateCurve { scheme: "oca".into(), points: Vec::new() };
    let mut others: Vec<(Scheme, RateCurve)> = config
        .schemes
        .iter()
        .filter(|s| matches!(s, Scheme::PairOptimal | Scheme::Uncoded | Scheme::Cutset))
        .map(|&s| (s, RateCurve { scheme: s.label().into(), points: Vec::new() }))
        .collect();

    for &m in &config.sweep {
        let cp = config.cache_at(m)?;
        if needs_pca {
            let rate = total_delivery_rate(&pca(&cp, &rp)?, &rp, n)?;
            pca_curve.points.push((m, rate));
        }
        if needs_oca {
            let rate = total_delivery_rate(&oca(&cp, &rp, n)?, &rp, n)?;
            oca_curve.points.push((m, rate));
        }
        for (scheme, curve) in others.iter_mut() {
            let rate = match scheme {
                Scheme::PairOptimal => pair::optimal_rate(
                    cp.capacities[0],
                    cp.capacities[1],
                    rp.rates[0],
                    rp.rates[1],
                )?,
                Scheme::Uncoded => uncoded_rate(&cp, &rp, n)?,
                Scheme::Cutset => cutset_bound(&cp, &rp, n)?.value,
                _ => unreachable!(),
            };
            curve.points.push((m, rate));
        }
    }

    let envelope = if config.schemes.contains(&Scheme::Envelope) && !config.sweep.is_empty() {
        Some(memory_sharing_envelope(&[pca_curve.clone(), oca_curve.clone()])?)
    } else if config.schemes.contains(&Scheme::Envelope) {
        Some(RateCurve { scheme: "envelope".into(), points: Vec::new() })
    } else {
        None
    };

    let mut out = Vec::with_capacity(config.schemes.len());
    for &scheme in &config.schemes {
        let curve = match scheme {
            Scheme::Pca => pca_curve.clone(),
            Scheme::Oca => oca_curve.clone(),
            Scheme::Envelope => envelope.clone().unwrap(),
            _ => others.iter().find(|(s, _)| *s == scheme).unwrap().1.clone(),
        };
        out.push(curve);
    }
    Ok(out)
}

/// Verifies the expected ordering between any bound/baseline curves present:
/// cutset below everything, envelope below PCA and OCA, uncoded above the
/// achievable schemes. Violations are internal errors.
pub fn check_dominance(curves: &[RateCurve]) -> Result<()> {
    let get = |name: &str| curves.iter().find(|c| c.scheme == name);
    let tol = 1e-9;
    let cutset = get("cutset");
    let uncoded = get("uncoded");
    let envelope = get("envelope");
    let achievable = ["pca", "oca", "envelope", "uncoded", "pair-optimal"];

    let check = |lo: &RateCurve, hi: &RateCurve| -> Result<()> {
        for (a, b) in lo.points.iter().zip(&hi.points) {
            if a.1 > b.1 + tol {
                return Err(Error::internal(format!(
                    "{} ({}) above {} ({}) at M={}",
                    lo.scheme, a.1, hi.scheme, b.1, a.0
                )));
            }
        }
        Ok(())
    };

    if let Some(cs) = cutset {
        for name in achievable {
            if let Some(c) = get(name) {
                check(cs, c)?;
            }
        }
    }
    if let Some(env) = envelope {
        for name in ["pca", "oca"] {
            if let Some(c) = get(name) {
                check(env, c)?;
            }
        }
    }
    if let Some(un) = uncoded {
        for name in ["pca", "oca", "envelope"] {
            if let Some(c) = get(name) {
                check(c, un)?;
            }
        }
    }
    Ok(())
}

/// 9 significant digits, no exponent; stable across runs.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// CSV with header `scheme,M,rate`, rows grouped by scheme in input order.
pub fn emit_csv(curves: &[RateCurve]) -> String {
    let mut out = String::from("scheme,M,rate\n");
    for c in curves {
        for &(m, rate) in &c.points {
            let _ = writeln!(out, "{},{},{}", c.scheme, format_sig9(m), format_sig9(rate));
        }
    }
    out
}

/// JSON array of `{scheme, points: [{M, rate}]}`. Hand-rolled so the digit
/// formatting matches the CSV exactly.
pub fn emit_json(curves: &[RateCurve]) -> String {
    let mut out = String::from("[\n");
    for (ci, c) in curves.iter().enumerate() {
        let _ = write!(out, "  {{\"scheme\": \"{}\", \"points\": [", c.scheme);
        for (pi, &(m, rate)) in c.points.iter().enumerate() {
            if pi > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{{\"M\": {}, \"rate\": {}}}", format_sig9(m), format_sig9(rate));
        }
        out.push_str("]}");
        if ci + 1 < curves.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

/// Reads curves back from `emit_json` output.
pub fn parse_json(text: &str) -> Result<Vec<RateCurve>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad curve JSON: {e}")))?;
    let arr = value.as_array().ok_or_else(|| Error::invalid("curve JSON must be an array"))?;
    let mut curves = Vec::with_capacity(arr.len());
    for item in arr {
        let scheme = item
            .get("scheme")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::invalid("curve entry is missing 'scheme'"))?
            .to_string();
        let pts = item
            .get("points")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::invalid("curve entry is missing 'points'"))?;
        let mut points = Vec::with_capacity(pts.len());
        for p in pts {
            let m = p.get("M").and_then(|v| v.as_f64());
            let r = p.get("rate").and_then(|v| v.as_f64());
            match (m, r) {
                (Some(m), Some(r)) => points.push((m, r)),
                _ => return Err(Error::invalid("curve point needs numeric 'M' and 'rate'")),
            }
        }
        curves.push(RateCurve { scheme, points });
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten_user_config(sweep: &str) -> ScenarioConfig {
        let text = format!(
            "files = 10\nusers = 10\nrates = 1,2,3,4,5,6,7,8,9,10\ncache = identical\n\
             sweep = {sweep}\nschemes = pca,oca,envelope,uncoded,cutset\n"
        );
        ScenarioConfig::parse(&text).unwrap()
    }

    #[test]
    fn parse_serialize_round_trip() {
        let c = ten_user_config("0,20,50,100");
        let again = ScenarioConfig::parse(&c.serialize()).unwrap();
        assert_eq!(c, again);

        let text = "files = 2\nusers = 2\nsigma2 = 1\ndistortions = 0.25,0.0625\n\
                    cache = scaled 0.2\nsweep = 0:0.5:2\nschemes = pair-optimal\nseed = 7\n";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.sweep, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c, ScenarioConfig::parse(&c.serialize()).unwrap());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(ScenarioConfig::parse("files = 2\n").is_err());
        assert!(ScenarioConfig::parse("files = 2\nusers = 2\nrates = 1,2\nsweep = 1\nschemes =\n").is_err());
        assert!(ScenarioConfig::parse(
            "files = 2\nusers = 2\nrates = 1,2\nsweep = 1\nschemes = magic\n"
        )
        .is_err());
        // comments and blank lines are fine
        let ok = "# demo\nfiles = 2\nusers = 2\n\nrates = 1,2 # inline\nsweep = 0,1\nschemes = cutset\n";
        assert!(ScenarioConfig::parse(ok).is_ok());
    }

    #[test]
    fn run_produces_requested_curves_in_order() {
        let c = ten_user_config("0,50,100");
        let curves = run_scenario(&c).unwrap();
        let labels: Vec<&str> = curves.iter().map(|c| c.scheme.as_str()).collect();
        assert_eq!(labels, vec!["pca", "oca", "envelope", "uncoded", "cutset"]);
        for curve in &curves {
            assert_eq!(curve.points.len(), 3);
            assert!(curve.points.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9), "{}", curve.scheme);
        }
        check_dominance(&curves).unwrap();
    }

    #[test]
    fn pair_optimal_requires_two_by_two() {
        let text = "files = 3\nusers = 2\nrates = 1,2\nsweep = 0,1\nschemes = pair-optimal\n";
        let c = ScenarioConfig::parse(text).unwrap();
        assert!(run_scenario(&c).is_err());
    }

    #[test]
    fn empty_sweep_gives_empty_curves() {
        let text = "files = 2\nusers = 2\nrates = 1,2\nsweep =\nschemes = pca,envelope\n";
        let c = ScenarioConfig::parse(text).unwrap();
        let curves = run_scenario(&c).unwrap();
        assert_eq!(curves.len(), 2);
        assert!(curves.iter().all(|c| c.points.is_empty()));
    }

    #[test]
    fn scaled_cache_model() {
        let text = "files = 10\nusers = 10\nrates = 1,2,3,4,5,6,7,8,9,10\ncache = scaled 0.2\n\
                    sweep = 0,10\nschemes = cutset\n";
        let c = ScenarioConfig::parse(text).unwrap();
        let cp = c.cache_at(10.0).unwrap();
        assert!((cp.capacities[0] - 2.0).abs() < 1e-12);
        assert!((cp.capacities[9] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn csv_shape_and_digits() {
        let curves = vec![RateCurve { scheme: "pca".into(), points: vec![(0.0, 55.0), (1.0, 2.0 / 3.0)] }];
        let csv = emit_csv(&curves);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "scheme,M,rate");
        assert_eq!(lines[1], "pca,0,55.0000000");
        assert_eq!(lines[2], "pca,1.00000000,0.666666667");
    }

    #[test]
    fn json_round_trip() {
        let c = ten_user_config("0,50,100");
        let curves = run_scenario(&c).unwrap();
        let text = emit_json(&curves);
        let back = parse_json(&text).unwrap();
        assert_eq!(back.len(), curves.len());
        for (a, b) in back.iter().zip(&curves) {
            assert_eq!(a.scheme, b.scheme);
            for (p, q) in a.points.iter().zip(&b.points) {
                assert!((p.0 - q.0).abs() < 1e-7 && (p.1 - q.1).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn outputs_byte_stable() {
        let c = ten_user_config("0,20,100");
        let a = run_scenario(&c).unwrap();
        let b = run_scenario(&c).unwrap();
        assert_eq!(emit_csv(&a), emit_csv(&b));
        assert_eq!(emit_json(&a), emit_json(&b));
    }

    #[test]
    fn dominance_check_catches_violations() {
        let cutset = RateCurve { scheme: "cutset".into(), points: vec![(0.0, 5.0)] };
        let pca = RateCurve { scheme: "pca".into(), points: vec![(0.0, 4.0)] };
        assert!(check_dominance(&[cutset, pca]).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(55.0), "55.0000000");
        assert_eq!(format_sig9(123456789.0), "123456789");
        assert_eq!(format_sig9(0.05), "0.0500000000");
    }
}
