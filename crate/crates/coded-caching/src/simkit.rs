//! Bit-level grounding for the rate formulas.
//!
//! Successive refinement is abstracted as a prefix property: the first
//! `ceil(n*r)` bits of a file are its rate-`r` description. On top of that,
//! [`man_coded_delivery_sim`] executes the reference subset-placement coded
//! delivery scheme with real XORs and bit-exact decode verification, and
//! [`verify_corner`] binds its measured rate to the analytic corner values.

use crate::error::{Error, Result};
use crate::layer::{coded_delivery_rate, SubLayerSpec};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A packed bit string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn random(rng: &mut impl RngCore, len: usize) -> Self {
        let mut words = vec![0u64; len.div_ceil(64)];
        for w in &mut words {
            *w = rng.next_u64();
        }
        let mut bits = Bits { words, len };
        bits.mask_tail();
        bits
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits> {
        if self.len != other.len {
            return Err(Error::internal(format!(
                "xor of unequal bit lengths {} and {}",
                self.len, other.len
            )));
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(Bits { words, len: self.len })
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// Bits `[start, start+len)` as a new string.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len, "slice {}+{} out of {}", start, len, self.len);
        let mut out = Bits::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.words[i / 64] |= 1u64 << (i % 64);
            }
        }
        out
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn first_byte(&self) -> u8 {
        (self.words.first().copied().unwrap_or(0) & 0xff) as u8
    }

    /// Pads with zero bits up to `len`.
    pub fn padded_to(&self, len: usize) -> Bits {
        assert!(len >= self.len);
        let mut out = self.clone();
        out.words.resize(len.div_ceil(64), 0);
        out.len = len;
        out
    }
}

/// One file materialized as bits; the prefix of length `ceil(n*r)` is the
/// rate-`r` description.
#[derive(Debug, Clone)]
pub struct BitFile {
    /// 1-based file index.
    pub index: usize,
    pub bits: Bits,
}

/// Deterministic pseudo-random files: `num_files` strings of
/// `ceil(block_len * top_rate)` bits each.
pub fn make_files(num_files: usize, block_len: usize, top_rate: f64, seed: u64) -> Result<Vec<BitFile>> {
    let bits_per_file = (block_len as f64 * top_rate).ceil() as usize;
    if bits_per_file == 0 {
        return Err(Error::invalid("files need at least one bit (n * r_K >= 1)"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok((1..=num_files)
        .map(|index| BitFile { index, bits: Bits::random(&mut rng, bits_per_file) })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub transmitted_bits: u64,
    pub decode_ok: bool,
    /// Recovered prefix length per user, in bits.
    pub per_user_recovered: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// All k-subsets of 0..n in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Runs subset-placement coded delivery for `num_users` users at integer
/// cache parameter `t`: each piece (the `ceil(n*piece_rate)`-bit prefix of a
/// file) is split into `C(L,t)` chunks, user `u` caches the chunks of every
/// file whose subset contains `u`, and the server sends one XOR per
/// `(t+1)`-subset. Identical transmissions are sent once (matters at t = 0).
pub fn man_coded_delivery_sim(
    num_users: usize,
    cache_t: usize,
    piece_rate: f64,
    block_len: usize,
    files: &[BitFile],
    demand: &[usize],
) -> Result<SimOutcome> {
    man_coded_delivery_inner(num_users, cache_t, piece_rate, block_len, files, demand, false)
}

/// Negative control twin of [`man_coded_delivery_sim`]: corrupts one cached
/// chunk of user 0 before decoding.
pub fn man_coded_delivery_sim_sabotaged(
    num_users: usize,
    cache_t: usize,
    piece_rate: f64,
    block_len: usize,
    files: &[BitFile],
    demand: &[usize],
) -> Result<SimOutcome> {
    man_coded_delivery_inner(num_users, cache_t, piece_rate, block_len, files, demand, true)
}

fn man_coded_delivery_inner(
    num_users: usize,
    cache_t: usize,
    piece_rate: f64,
    block_len: usize,
    files: &[BitFile],
    demand: &[usize],
    corrupt_cache: bool,
) -> Result<SimOutcome> {
    let l = num_users;
    let t = cache_t;
    if l == 0 {
        return Err(Error::invalid("need at least one user"));
    }
    if t > l {
        return Err(Error::invalid(format!("cache_t {t} exceeds num_users {l}")));
    }
    if demand.len() != l {
        return Err(Error::invalid("demand length must equal num_users"));
    }
    for &d in demand {
        if d == 0 || d > files.len() {
            return Err(Error::invalid(format!("demand {d} outside 1..={}", files.len())));
        }
    }

    let piece_bits = (block_len as f64 * piece_rate).ceil() as usize;
    for f in files {
        if f.bits.len() < piece_bits {
            return Err(Error::invalid(format!(
                "file {} has {} bits, piece needs {piece_bits}",
                f.index,
                f.bits.len()
            )));
        }
    }

    let cache_subsets = subsets(l, t);
    let num_chunks = cache_subsets.len();
    let chunk_bits = piece_bits.div_ceil(num_chunks);
    let padded = num_chunks * chunk_bits;

    // chunks[file][chunk_index]
    let chunks: Vec<Vec<Bits>> = files
        .iter()
        .map(|f| {
            let piece = f.bits.slice(0, piece_bits).padded_to(padded);
            (0..num_chunks).map(|c| piece.slice(c * chunk_bits, chunk_bits)).collect()
        })
        .collect();

    // User caches: chunk c of every file, for every subset containing the user.
    let mut user_cache: Vec<Vec<Option<Vec<Bits>>>> = vec![vec![None; num_chunks]; l];
    for (c, subset) in cache_subsets.iter().enumerate() {
        for &u in subset {
            user_cache[u][c] = Some(chunks.iter().map(|fc| fc[c].clone()).collect());
        }
    }
    if corrupt_cache {
        'outer: for slot in user_cache[0].iter_mut() {
            if let Some(per_file) = slot {
                for bits in per_file.iter_mut() {
                    if bits.len() > 0 {
                        bits.flip(0);
                        break 'outer;
                    }
                }
            }
        }
    }

    // Delivery: one XOR per (t+1)-subset, deduplicated by content key.
    let chunk_index: std::collections::HashMap<Vec<usize>, usize> = cache_subsets
        .iter()
        .cloned()
        .zip(0..num_chunks)
        .collect();
    let mut wire: Vec<(Vec<(usize, usize)>, Bits)> = Vec::new(); // (sorted (file, chunk) key, payload)
    let mut seen = std::collections::HashSet::new();
    for group in subsets(l, t + 1) {
        let mut key: Vec<(usize, usize)> = group
            .iter()
            .map(|&u| {
                let rest: Vec<usize> = group.iter().copied().filter(|&v| v != u).collect();
                (demand[u], chunk_index[&rest])
            })
            .collect();
        key.sort_unstable();
        key.dedup();
        if !seen.insert(key.clone()) {
            continue;
        }
        let mut payload = Bits::zeros(chunk_bits);
        for &(file, c) in &key {
            payload = payload.xor(&chunks[file - 1][c])?;
        }
        wire.push((key, payload));
    }
    let transmitted_bits: u64 = wire.iter().map(|(_, b)| b.len() as u64).sum();

    // Decode per user and verify bit-exactly against the source piece.
    let mut decode_ok = true;
    let mut per_user_recovered = Vec::with_capacity(l);
    for u in 0..l {
        let want = demand[u] - 1;
        let mut have: Vec<Option<Bits>> = (0..num_chunks)
            .map(|c| user_cache[u][c].as_ref().map(|per_file| per_file[want].clone()))
            .collect();
        // Resolve XORs: user u cancels every term it caches.
        for (key, payload) in &wire {
            let missing: Vec<&(usize, usize)> =
                key.iter().filter(|(_, c)| user_cache[u][*c].is_none()).collect();
            if missing.len() != 1 {
                continue;
            }
            let &(file, c) = missing[0];
            if file != demand[u] || have[c].is_some() {
                continue;
            }
            let mut acc = payload.clone();
            for &(f2, c2) in key.iter() {
                if (f2, c2) == (file, c) {
                    continue;
                }
                acc = acc.xor(&user_cache[u][c2].as_ref().unwrap()[f2 - 1])?;
            }
            have[c] = Some(acc);
        }

        let mut ok = true;
        let mut recovered_bits = 0usize;
        for c in 0..num_chunks {
            match &have[c] {
                Some(bits) if *bits == chunks[want][c] => recovered_bits += chunk_bits,
                _ => ok = false,
            }
        }
        per_user_recovered.push(recovered_bits.min(piece_bits));
        if !ok {
            decode_ok = false;
        }
    }

    Ok(SimOutcome { transmitted_bits, decode_ok, per_user_recovered })
}

/// Checks one analytic corner of the coded-delivery rate against a bit-level
/// run at block length `n`: the `L^i` cached users run subset-placement
/// delivery at parameter `t`, the `i-1` cache-less users are served by plain
/// unicast of their full pieces. True iff decode succeeds and the measured
/// rate matches within per-chunk ceiling slack.
pub fn verify_corner(spec: &SubLayerSpec, t: usize, n: usize, seed: u64) -> Result<bool> {
    if t == 0 || t > spec.cached_users {
        return Err(Error::invalid(format!(
            "t must be in 1..={}, got {t}",
            spec.cached_users
        )));
    }
    let l_i = spec.cached_users;
    let nf = spec.num_files;
    let r = spec.cache_per_user * l_i as f64 / (t as f64 * nf as f64);
    let expected = coded_delivery_rate(spec, r)?;
    if r == 0.0 {
        return Ok(expected == 0.0);
    }

    let files = make_files(nf, n, r, seed)?;
    let demand: Vec<usize> = (0..l_i).map(|u| (u % nf) + 1).collect();
    let sim = man_coded_delivery_sim(l_i, t, r, n, &files, &demand)?;
    if !sim.decode_ok {
        return Ok(false);
    }

    let piece_bits = (n as f64 * r).ceil() as u64;
    let unicast_bits = (spec.sublayer_index - 1) as u64 * piece_bits;
    let total = sim.transmitted_bits + unicast_bits;

    let slack_chunks = binomial(l_i, t) + binomial(l_i, t + 1) + spec.sublayer_index;
    let tol = slack_chunks as f64 / n as f64;
    Ok((total as f64 / n as f64 - expected).abs() <= tol)
}
