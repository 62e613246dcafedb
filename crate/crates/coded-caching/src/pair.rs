//! Optimal lossy caching for two users and two files.
//!
//! The two files are source-coded into an `r1`-bit first layer and an
//! `(r2 - r1)`-bit refinement layer. The first layers are split into parts
//! 1..=6 and the refinement layers into parts 7..=8, with `|A_i| = |B_i|`.
//! User 1 caches `{A1^B1, A3, B3, A5, B5}` and user 2 caches
//! `{A2^B2, A4, B4, A5, B5, A7, B7}`; only the part sizes vary with the cache
//! capacities. Delivery picks, per part, either a plain transmission or an
//! XOR that two users resolve from different cached complements.

use crate::error::{Error, Result};
use crate::rate_model::DemandVector;
use crate::simkit::Bits;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::HashSet;

const SIZE_EPS: f64 = 1e-12;

/// The five cache-capacity regimes; boundary points go to the lowest label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    I,
    II,
    III,
    IV,
    V,
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseId::I => "i",
            CaseId::II => "ii",
            CaseId::III => "iii",
            CaseId::IV => "iv",
            CaseId::V => "v",
        };
        f.write_str(s)
    }
}

/// One part of one file: `file` is 1 or 2, `part` is 1..=8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub file: usize,
    pub part: usize,
}

impl Symbol {
    pub fn new(file: usize, part: usize) -> Self {
        debug_assert!((1..=2).contains(&file) && (1..=8).contains(&part));
        Symbol { file, part }
    }
}

impl std::fmt::Display for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = if self.file == 1 { 'A' } else { 'B' };
        write!(f, "{}{}", name, self.part)
    }
}

/// A piece stored in a user cache. `XorPair { part }` stores `A_part ^ B_part`
/// (costs one part size); `PlainPair { part }` stores both `A_part` and
/// `B_part` (costs two part sizes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePiece {
    XorPair { part: usize },
    PlainPair { part: usize },
}

/// Part sizes and cache contents for one (M1, M2, r1, r2) point.
#[derive(Debug, Clone)]
pub struct PlacementTable {
    /// `part_sizes[i]` is `|A_{i+1}| = |B_{i+1}|` in bpss.
    pub part_sizes: [f64; 8],
    pub l1: f64,
    pub l2: f64,
    pub user1_cache: Vec<CachePiece>,
    pub user2_cache: Vec<CachePiece>,
}

impl PlacementTable {
    pub fn size(&self, part: usize) -> f64 {
        self.part_sizes[part - 1]
    }

    /// Cache load of a user in bpss (XOR pieces count once, pairs twice).
    pub fn cache_load(&self, user: usize) -> f64 {
        let pieces = if user == 1 { &self.user1_cache } else { &self.user2_cache };
        pieces
            .iter()
            .map(|p| match *p {
                CachePiece::XorPair { part } => self.size(part),
                CachePiece::PlainPair { part } => 2.0 * self.size(part),
            })
            .sum()
    }
}

/// One transmission: either a plain part or the XOR of two equal-size parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessagePiece {
    Plain(Symbol),
    Xor(Symbol, Symbol),
}

#[derive(Debug, Clone)]
pub struct DeliveryMessage {
    pub pieces: Vec<MessagePiece>,
    pub total_rate: f64,
}

fn check_inputs(m1: f64, m2: f64, r1: f64, r2: f64) -> Result<()> {
    for (name, v) in [("M1", m1), ("M2", m2), ("r1", r1), ("r2", r2)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    if r1 > r2 {
        return Err(Error::invalid(format!("r1 ({r1}) must not exceed r2 ({r2})")));
    }
    Ok(())
}

/// Classifies (M1, M2) into one of the five regimes. The conditions partition
/// the quadrant; evaluation order breaks boundary ties toward the lower label.
pub fn classify_case(m1: f64, m2: f64, r1: f64, r2: f64) -> Result<CaseId> {
    check_inputs(m1, m2, r1, r2)?;
    if m1 + m2 <= r1 {
        return Ok(CaseId::I);
    }
    if m1 <= r1 && m2 <= 2.0 * r2 - r1 {
        return Ok(CaseId::II);
    }
    if m1 > r1 && m2 <= 2.0 * r2 && m2 - m1 <= 2.0 * (r2 - r1) {
        return Ok(CaseId::III);
    }
    if m1 <= 2.0 * r1 && m2 > 2.0 * r2 - r1 && m2 - m1 > 2.0 * (r2 - r1) {
        return Ok(CaseId::IV);
    }
    if m1 > 2.0 * r1 && m2 > 2.0 * r2 {
        return Ok(CaseId::V);
    }
    Err(Error::internal(format!(
        "case classification gap at M1={m1} M2={m2} r1={r1} r2={r2}"
    )))
}

/// Optimal delivery rate: the five-term max of the converse bound, which the
/// placement below matches exactly.
pub fn optimal_rate(m1: f64, m2: f64, r1: f64, r2: f64) -> Result<f64> {
    check_inputs(m1, m2, r1, r2)?;
    Ok([
        r1 - m1 / 2.0,
        r2 - m2 / 2.0,
        r1 + r2 - (m1 + m2),
        r1 / 2.0 + r2 - (m1 + m2) / 2.0,
        0.0,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max))
}

/// Case-specific closed form; must agree with [`optimal_rate`] everywhere.
pub fn case_formula_rate(case: CaseId, m1: f64, m2: f64, r1: f64, r2: f64) -> f64 {
    match case {
        CaseId::I => r1 + r2 - (m1 + m2),
        CaseId::II => r1 / 2.0 + r2 - (m1 + m2) / 2.0,
        CaseId::III => r2 - m2 / 2.0,
        CaseId::IV => r1 - m1 / 2.0,
        CaseId::V => 0.0,
    }
}

/// Builds the part sizes for the classified case.
///
/// Two spots deviate from the published table, which is internally
/// inconsistent there (sizes go negative while the rate formula stays valid):
/// in case ii with `M1 + M2 > 2*r2 - r1` the surplus of user 2's cache is
/// spent on fully cached refinement parts plus a symmetric split of parts
/// 3/4, and in case iv with `M1 > r1` part 2 shrinks to zero while parts
/// 3/4/5 absorb user 1's cache. Both variants keep the cache loads exact and
/// the delivery rate at the optimum.
pub fn build_placement(m1: f64, m2: f64, r1: f64, r2: f64) -> Result<PlacementTable> {
    let case = classify_case(m1, m2, r1, r2)?;
    let mut s = [0.0f64; 8];
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    match case {
        CaseId::I => {
            s[0] = m1;
            s[1] = m2;
            s[5] = r1 - m1 - m2;
            s[7] = r2 - r1;
        }
        CaseId::II => {
            if m1 + m2 <= 2.0 * r2 - r1 {
                s[0] = m1;
                s[1] = r1 - m1;
                s[6] = (m1 + m2 - r1) / 2.0;
                s[7] = (r2 - r1) - s[6];
            } else {
                // User 2's surplus beyond two fully cached refinement parts
                // goes to the first layer.
                let c2 = m2 - 2.0 * (r2 - r1);
                l2 = (m1 + c2 - r1) / 2.0;
                s[0] = r1 - c2;
                s[1] = r1 - m1;
                s[2] = l2;
                s[3] = l2;
                s[6] = r2 - r1;
            }
        }
        CaseId::III => {
            l1 = (m1 - r1).min(m2 / 2.0 - (r2 - r1)).max(0.0);
            l2 = (m2 / 2.0 - (r2 - r1) - l1).max(0.0);
            s[0] = r1 - l1 - 2.0 * l2;
            s[2] = l2;
            s[3] = l2;
            s[4] = l1;
            s[6] = (r2 - r1).min(m2 / 2.0);
            s[7] = (r2 - r1 - m2 / 2.0).max(0.0);
        }
        CaseId::IV => {
            if m1 <= r1 {
                l2 = m1 / 2.0;
                s[1] = r1 - m1;
            } else {
                l2 = r1 - m1 / 2.0;
                l1 = m1 - r1;
                s[4] = l1;
            }
            s[2] = l2;
            s[3] = l2;
            s[6] = r2 - r1;
        }
        CaseId::V => {
            s[4] = r1;
            s[6] = r2 - r1;
        }
    }

    for (i, v) in s.iter_mut().enumerate() {
        if *v < -SIZE_EPS {
            return Err(Error::internal(format!(
                "part {} has negative size {} in case {} (M1={m1}, M2={m2}, r1={r1}, r2={r2})",
                i + 1,
                *v,
                case
            )));
        }
        *v = v.max(0.0);
    }

    let first_layer: f64 = s[..6].iter().sum();
    let second_layer: f64 = s[6] + s[7];
    if (first_layer - r1).abs() > 1e-9 || (second_layer - (r2 - r1)).abs() > 1e-9 {
        return Err(Error::internal(format!(
            "layer partition broken in case {case}: first={first_layer} vs r1={r1}, second={second_layer} vs {}",
            r2 - r1
        )));
    }

    let mut user1_cache = Vec::new();
    if s[0] > 0.0 {
        user1_cache.push(CachePiece::XorPair { part: 1 });
    }
    for part in [3, 5] {
        if s[part - 1] > 0.0 {
            user1_cache.push(CachePiece::PlainPair { part });
        }
    }
    let mut user2_cache = Vec::new();
    if s[1] > 0.0 {
        user2_cache.push(CachePiece::XorPair { part: 2 });
    }
    for part in [4, 5, 7] {
        if s[part - 1] > 0.0 {
            user2_cache.push(CachePiece::PlainPair { part });
        }
    }

    let table = PlacementTable { part_sizes: s, l1, l2, user1_cache, user2_cache };
    if table.cache_load(1) > m1 + 1e-9 {
        return Err(Error::internal(format!(
            "user 1 cache overflow in case {case}: load {} > M1 {m1}",
            table.cache_load(1)
        )));
    }
    if table.cache_load(2) > m2 + 1e-9 {
        return Err(Error::internal(format!(
            "user 2 cache overflow in case {case}: load {} > M2 {m2}",
            table.cache_load(2)
        )));
    }
    Ok(table)
}

fn check_pair_demand(demand: &DemandVector) -> Result<(usize, usize)> {
    if demand.demands.len() != 2 {
        return Err(Error::invalid("pair scheme needs exactly 2 demands"));
    }
    let (d1, d2) = (demand.demands[0], demand.demands[1]);
    if !(1..=2).contains(&d1) || !(1..=2).contains(&d2) {
        return Err(Error::invalid("pair demands must be in 1..=2"));
    }
    Ok((d1, d2))
}

/// Builds the broadcast message for any of the four demand vectors.
///
/// Part 1 is sent as the symbol of user 2's file when demands differ (user 1
/// resolves its own via the cached XOR) and plainly otherwise; part 2
/// symmetrically carries user 1's file. Parts 3/4 pair the symbol user 1
/// misses with the one user 2 misses in a single XOR. Parts 6 and 8 are
/// nobody's cache and go out plainly, part 6 once per distinct demanded file.
pub fn delivery_message(placement: &PlacementTable, demand: &DemandVector) -> Result<DeliveryMessage> {
    let (d1, d2) = check_pair_demand(demand)?;
    let s = &placement.part_sizes;
    let mut pieces = Vec::new();
    let mut total = 0.0;

    if s[0] > 0.0 {
        pieces.push(MessagePiece::Plain(Symbol::new(d2, 1)));
        total += s[0];
    }
    if s[1] > 0.0 {
        pieces.push(MessagePiece::Plain(Symbol::new(d1, 2)));
        total += s[1];
    }
    if s[2] > 0.0 || s[3] > 0.0 {
        if (s[2] - s[3]).abs() > 1e-9 {
            return Err(Error::internal("parts 3 and 4 must have equal size for the cross XOR"));
        }
        pieces.push(MessagePiece::Xor(Symbol::new(d1, 4), Symbol::new(d2, 3)));
        total += s[3];
    }
    if s[5] > 0.0 {
        pieces.push(MessagePiece::Plain(Symbol::new(d1, 6)));
        total += s[5];
        if d2 != d1 {
            pieces.push(MessagePiece::Plain(Symbol::new(d2, 6)));
            total += s[5];
        }
    }
    if s[7] > 0.0 {
        pieces.push(MessagePiece::Plain(Symbol::new(d2, 8)));
        total += s[7];
    }

    Ok(DeliveryMessage { pieces, total_rate: total })
}

fn cache_symbols(placement: &PlacementTable, user: usize) -> (HashSet<Symbol>, Vec<(Symbol, Symbol)>) {
    let pieces = if user == 1 { &placement.user1_cache } else { &placement.user2_cache };
    let mut known = HashSet::new();
    let mut xors = Vec::new();
    for p in pieces {
        match *p {
            CachePiece::PlainPair { part } => {
                known.insert(Symbol::new(1, part));
                known.insert(Symbol::new(2, part));
            }
            CachePiece::XorPair { part } => {
                xors.push((Symbol::new(1, part), Symbol::new(2, part)));
            }
        }
    }
    (known, xors)
}

/// Parts a user must reconstruct: user 1 needs the first layer of its file,
/// user 2 needs both layers.
fn needed_parts(user: usize) -> std::ops::RangeInclusive<usize> {
    if user == 1 {
        1..=6
    } else {
        1..=8
    }
}

/// Symbol-level decode for one user: resolves XORs against cached and
/// delivered pieces until a fixpoint, then checks every needed nonzero part
/// of the demanded file is known.
pub fn decode(
    user: usize,
    placement: &PlacementTable,
    message: &DeliveryMessage,
    demand: &DemandVector,
) -> Result<Vec<Symbol>> {
    if user != 1 && user != 2 {
        return Err(Error::invalid(format!("user must be 1 or 2, got {user}")));
    }
    let (d1, d2) = check_pair_demand(demand)?;
    let want_file = if user == 1 { d1 } else { d2 };

    let (mut known, mut xors) = cache_symbols(placement, user);
    for piece in &message.pieces {
        match *piece {
            MessagePiece::Plain(sym) => {
                known.insert(sym);
            }
            MessagePiece::Xor(a, b) => xors.push((a, b)),
        }
    }

    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in &xors {
            let ka = known.contains(&a);
            let kb = known.contains(&b);
            if ka && !kb {
                known.insert(b);
                changed = true;
            } else if kb && !ka {
                known.insert(a);
                changed = true;
            }
        }
    }

    let mut recovered = Vec::new();
    for part in needed_parts(user) {
        if placement.size(part) <= 0.0 {
            continue;
        }
        let sym = Symbol::new(want_file, part);
        if !known.contains(&sym) {
            return Err(Error::DecodeFailure(format!(
                "user {user} cannot recover {sym} for demand ({d1},{d2})"
            )));
        }
        recovered.push(sym);
    }
    Ok(recovered)
}

/// Result of a bit-level end-to-end run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSimOutcome {
    pub transmitted_bits: u64,
    pub decode_ok: bool,
}

/// Materializes the placement at block length `n`, runs delivery and decode
/// with real XOR on bits, and verifies every recovered part bit-exactly
/// against the source. Each part is `ceil(n * size)` bits.
pub fn simulate_pair(
    n: usize,
    m1: f64,
    m2: f64,
    r1: f64,
    r2: f64,
    demand: &DemandVector,
    seed: u64,
) -> Result<PairSimOutcome> {
    simulate_pair_inner(n, m1, m2, r1, r2, demand, seed, false)
}

/// Negative control: flips one cached bit before decoding. Must report
/// `decode_ok = false` whenever the cache actually holds data.
pub fn simulate_pair_sabotaged(
    n: usize,
    m1: f64,
    m2: f64,
    r1: f64,
    r2: f64,
    demand: &DemandVector,
    seed: u64,
) -> Result<PairSimOutcome> {
    simulate_pair_inner(n, m1, m2, r1, r2, demand, seed, true)
}

#[allow(clippy::too_many_arguments)]
fn simulate_pair_inner(
    n: usize,
    m1: f64,
    m2: f64,
    r1: f64,
    r2: f64,
    demand: &DemandVector,
    seed: u64,
    corrupt_cache: bool,
) -> Result<PairSimOutcome> {
    let (d1, d2) = check_pair_demand(demand)?;
    let placement = build_placement(m1, m2, r1, r2)?;
    let message = delivery_message(&placement, demand)?;

    let part_bits = |part: usize| (n as f64 * placement.size(part)).ceil() as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Source parts: index [file-1][part-1].
    let mut source = Vec::with_capacity(2);
    for _file in 1..=2 {
        let parts: Vec<Bits> = (1..=8).map(|p| Bits::random(&mut rng, part_bits(p))).collect();
        source.push(parts);
    }
    let bits_of = |sym: Symbol| -> &Bits { &source[sym.file - 1][sym.part - 1] };

    let mut transmitted_bits = 0u64;
    let mut wire: Vec<(MessagePiece, Bits)> = Vec::new();
    for piece in &message.pieces {
        let payload = match *piece {
            MessagePiece::Plain(sym) => bits_of(sym).clone(),
            MessagePiece::Xor(a, b) => bits_of(a).xor(bits_of(b))?,
        };
        transmitted_bits += payload.len() as u64;
        wire.push((*piece, payload));
    }

    let mut decode_ok = true;
    for user in 1..=2 {
        let want_file = if user == 1 { d1 } else { d2 };
        let (cached, cached_xors) = cache_symbols(&placement, user);
        let mut known: Vec<(Symbol, Bits)> =
            cached.iter().map(|&sym| (sym, bits_of(sym).clone())).collect();
        let mut xors: Vec<(Symbol, Symbol, Bits)> = cached_xors
            .iter()
            .map(|&(a, b)| Ok((a, b, bits_of(a).xor(bits_of(b))?)))
            .collect::<Result<_>>()?;

        if corrupt_cache {
            // Flip one bit in the first nonempty cached piece.
            let mut done = false;
            for (_, bits) in known.iter_mut() {
                if bits.len() > 0 {
                    bits.flip(0);
                    done = true;
                    break;
                }
            }
            if !done {
                for (_, _, bits) in xors.iter_mut() {
                    if bits.len() > 0 {
                        bits.flip(0);
                        break;
                    }
                }
            }
        }

        for (piece, payload) in &wire {
            match *piece {
                MessagePiece::Plain(sym) => known.push((sym, payload.clone())),
                MessagePiece::Xor(a, b) => xors.push((a, b, payload.clone())),
            }
        }

        let mut changed = true;
        while changed {
            changed = false;
            for (a, b, payload) in &xors {
                let have_a = known.iter().find(|(s, _)| s == a).map(|(_, bits)| bits.clone());
                let have_b = known.iter().find(|(s, _)| s == b).map(|(_, bits)| bits.clone());
                match (have_a, have_b) {
                    (Some(bits_a), None) => {
                        known.push((*b, payload.xor(&bits_a)?));
                        changed = true;
                    }
                    (None, Some(bits_b)) => {
                        known.push((*a, payload.xor(&bits_b)?));
                        changed = true;
                    }
                    _ => {}
                }
            }
        }

        for part in needed_parts(user) {
            if part_bits(part) == 0 {
                continue;
            }
            let sym = Symbol::new(want_file, part);
            match known.iter().find(|(s, _)| *s == sym) {
                Some((_, bits)) if bits == bits_of(sym) => {}
                _ => {
                    decode_ok = false;
                }
            }
        }
    }

    Ok(PairSimOutcome { transmitted_bits, decode_ok })
}
