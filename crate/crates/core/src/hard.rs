//! Hard instances for online Hamming distance.
//!
//! A multiset `V` of `mu^2` random binary vectors of length `mu` is written
//! out as `R = rho_0 rho_1 ... rho_{mu^2 - 1}` (`r = mu^3` symbols), where
//! `rho_i` spells `v_i` with `i` for 1 and `STAR = mu^2` for 0. The fixed
//! string `F` holds a copy of `R` at every position `n - 2^j` with
//! `r < 2^j <= n` and the filler `TRIANGLE = 2^delta - 1` elsewhere.
//!
//! Update blocks of length `2r` start as `TSYMB^(2r)` (`TSYMB = mu^2 + 1`,
//! absent from `R`). A round at slide offset `o` picks `mu` vectors and writes
//! symbol `i` at `(i + 1) mu + o`, the cell just right of `rho_i` when the
//! block is slid `o` steps left. Over alignments `o + 1 ..= o + mu` the match
//! counts of `R` against the block are then the picked vectors' sum read
//! backwards, and the written symbols match nowhere else.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::strings::{bits_for, mismatch_counts_fast, Alphabet, CountArray, Symbol, SymbolString};

/// Stands in for not-yet-known updates while decoding; outside every alphabet.
const UNKNOWN: Symbol = Symbol::MAX - 1;

/// `mu^2` binary vectors of length `mu`, duplicates allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VectorMultiset {
    mu: usize,
    vectors: Vec<Vec<u8>>,
}

impl VectorMultiset {
    pub fn new(mu: usize, vectors: Vec<Vec<u8>>) -> Result<Self> {
        if mu < 2 {
            return Err(invalid!("block length mu must be at least 2, got {mu}"));
        }
        if vectors.len() != mu * mu {
            return Err(invalid!("need mu^2 = {} vectors, got {}", mu * mu, vectors.len()));
        }
        if vectors.iter().any(|v| v.len() != mu || v.iter().any(|&b| b > 1)) {
            return Err(invalid!("every vector must be a 0/1 vector of length {mu}"));
        }
        Ok(VectorMultiset { mu, vectors })
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<u8>] {
        &self.vectors
    }
}

/// Each bit an independent fair coin from a ChaCha8 stream seeded with `seed`.
pub fn sample_vectors(mu: usize, seed: u64) -> Result<VectorMultiset> {
    if mu < 2 {
        return Err(invalid!("block length mu must be at least 2, got {mu}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..mu * mu).map(|_| (0..mu).map(|_| u8::from(rng.random::<bool>())).collect()).collect();
    VectorMultiset::new(mu, vectors)
}

pub fn is_prime(k: usize) -> bool {
    k >= 2 && (2..).take_while(|d| d * d <= k).all(|d| !k.is_multiple_of(d))
}

/// Why `mu` falls outside the setting where many distinct vector sums are
/// guaranteed (`mu - 1` prime), if it does.
pub fn strict_violation(mu: usize) -> Option<String> {
    if is_prime(mu.saturating_sub(1)) {
        None
    } else {
        Some(alloc::format!("mu - 1 = {} is not prime", mu.saturating_sub(1)))
    }
}

/// Reserved symbols for block length `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symbols {
    pub alphabet: Alphabet,
    pub star: Symbol,
    pub tsymb: Symbol,
    pub psymb: Symbol,
}

impl Symbols {
    /// `delta = ceil(log2(r + 2))`, so `[r]` plus the filler fit.
    pub fn for_mu(mu: usize) -> Result<Self> {
        let r = mu.checked_pow(3).ok_or_else(|| invalid!("mu = {mu} is too large"))?;
        let alphabet = Alphabet::new(bits_for(r as u64 + 1))?;
        Ok(Symbols {
            alphabet,
            star: (mu * mu) as Symbol,
            tsymb: (mu * mu + 1) as Symbol,
            psymb: alphabet.max_symbol(),
        })
    }
}

pub fn encode_rho(v: &[u8], i: usize, star: Symbol) -> Vec<Symbol> {
    v.iter().map(|&b| if b == 1 { i as Symbol } else { star }).collect()
}

pub fn build_r(v: &VectorMultiset) -> SymbolString {
    let symbols = Symbols::for_mu(v.mu).expect("validated mu");
    let r = v.vectors.iter().enumerate().flat_map(|(i, vec)| encode_rho(vec, i, symbols.star)).collect();
    SymbolString::new(symbols.alphabet, r).expect("symbols below mu^2 + 2 fit")
}

/// Start positions `n - 2^j` of the copies of a length-`r` string, for
/// every `j` with `r < 2^j <= n`, in increasing order.
pub fn copy_positions(r: usize, n: usize) -> Vec<usize> {
    let mut out: Vec<usize> =
        (0..usize::BITS).map(|j| 1usize << j).take_while(|&p| p <= n).filter(|&p| p > r).map(|p| n - p).collect();
    out.reverse();
    out
}

pub fn build_f(r: &SymbolString, n: usize, filler: Symbol) -> Result<SymbolString> {
    if r.is_empty() || n < 2 * r.len() {
        return Err(invalid!("need n >= 2r, got n = {n}, r = {}", r.len()));
    }
    let mut f = SymbolString::filled(r.alphabet(), filler, n)?;
    for pos in copy_positions(r.len(), n) {
        for (k, &s) in r.iter().enumerate() {
            f.set(pos + k, s)?;
        }
    }
    Ok(f)
}

/// Element-wise sum of the vectors at distinct positions `indices`.
pub fn vsum(v: &VectorMultiset, indices: &[usize]) -> Result<Vec<u32>> {
    let mut seen = BTreeSet::new();
    let mut acc = vec![0u32; v.mu];
    for &i in indices {
        let vec = v.vectors.get(i).ok_or_else(|| invalid!("position {i} outside a multiset of {}", v.len()))?;
        if !seen.insert(i) {
            return Err(invalid!("position {i} picked twice"));
        }
        for (a, &b) in acc.iter_mut().zip(vec) {
            *a += u32::from(b);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VsumCount {
    pub count: u64,
    /// False when the count is a lower bound from sampled picks.
    pub exhaustive: bool,
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Distinct sums of `mu` distinct elements drawn from the multi-subset of `v`
/// selected by `mask`. Enumerates every pick when there are at most `cap` of
/// them, otherwise samples `cap` picks and reports a lower bound.
pub fn count_distinct_vsums(v: &VectorMultiset, mask: &[bool], cap: u64, seed: u64) -> Result<VsumCount> {
    if cap == 0 {
        return Err(invalid!("cap must be positive"));
    }
    if mask.len() != v.len() {
        return Err(Error::LengthMismatch { left: mask.len(), right: v.len() });
    }
    let pool: Vec<usize> = (0..v.len()).filter(|&i| mask[i]).collect();
    let mu = v.mu;
    if pool.len() < mu {
        return Ok(VsumCount { count: 0, exhaustive: true });
    }
    let sum_of = |picks: &mut dyn Iterator<Item = usize>| -> Vec<u32> {
        let mut acc = vec![0u32; mu];
        for i in picks {
            for (a, &b) in acc.iter_mut().zip(&v.vectors[i]) {
                *a += u32::from(b);
            }
        }
        acc
    };

    let mut sums = BTreeSet::new();
    let total = binomial(pool.len() as u64, mu as u64);
    if total.is_some_and(|t| t <= cap) {
        let mut idx: Vec<usize> = (0..mu).collect();
        loop {
            sums.insert(sum_of(&mut idx.iter().map(|&k| pool[k])));
            // next combination in lexicographic order
            let Some(pos) = (0..mu).rev().find(|&p| idx[p] < pool.len() - mu + p) else { break };
            idx[pos] += 1;
            for p in pos + 1..mu {
                idx[p] = idx[p - 1] + 1;
            }
        }
        Ok(VsumCount { count: sums.len() as u64, exhaustive: true })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..cap {
            let picks = rand::seq::index::sample(&mut rng, pool.len(), mu);
            sums.insert(sum_of(&mut picks.iter().map(|k| pool[k])));
        }
        Ok(VsumCount { count: sums.len() as u64, exhaustive: false })
    }
}

/// `mu` distinct vector picks applied at slide offset `offset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Round {
    pub offset: usize,
    pub picks: Vec<usize>,
}

/// How a random schedule is laid out: `processes` runs of `rounds_per_process`
/// rounds, consecutive runs separated by one extra single-step slide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleShape {
    pub processes: usize,
    pub rounds_per_process: usize,
}

impl ScheduleShape {
    /// `max(1, mu / 64)` rounds per process, repeated `mu` times.
    pub fn standard(mu: usize) -> Self {
        ScheduleShape { processes: mu, rounds_per_process: (mu / 64).max(1) }
    }

    /// Offsets of every round that still fits inside `R` (`offset + mu <= r`).
    pub fn offsets(&self, mu: usize) -> Vec<usize> {
        let r = mu * mu * mu;
        let stride = self.rounds_per_process * mu + 1;
        (0..self.processes)
            .flat_map(|p| (0..self.rounds_per_process).map(move |k| p * stride + k * mu))
            .take_while(|&o| o + mu <= r)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChoiceSchedule {
    pub mu: usize,
    pub rounds: Vec<Round>,
}

impl ChoiceSchedule {
    pub fn empty(mu: usize) -> Self {
        ChoiceSchedule { mu, rounds: Vec::new() }
    }

    /// Block position that picking vector `i` at `offset` writes to.
    pub fn target(mu: usize, offset: usize, i: usize) -> usize {
        (i + 1) * mu + offset
    }

    /// Alignments whose match counts the schedule determines, round by round.
    pub fn alignments(&self) -> Vec<usize> {
        self.rounds.iter().flat_map(|r| r.offset + 1..=r.offset + self.mu).collect()
    }

    /// Total slide distance covered by the rounds.
    pub fn total_slide(&self) -> usize {
        self.rounds.last().map_or(0, |r| r.offset + self.mu)
    }

    /// Check shape and spacing, then the no-reuse rule.
    pub fn validate(&self) -> Result<()> {
        self.positions().map(|_| ())
    }

    fn positions(&self) -> Result<Vec<Vec<usize>>> {
        let mu = self.mu;
        if mu < 2 {
            return Err(invalid!("block length mu must be at least 2, got {mu}"));
        }
        let r = mu * mu * mu;
        let mut occupied = BTreeSet::new();
        let mut previous: Option<usize> = None;
        let mut out = Vec::with_capacity(self.rounds.len());
        for (k, round) in self.rounds.iter().enumerate() {
            if round.picks.len() != mu {
                return Err(invalid!("round {k} picks {} vectors, expected {mu}", round.picks.len()));
            }
            if previous.is_some_and(|p| round.offset < p + mu) {
                return Err(invalid!("round {k} at offset {} overlaps the previous round's alignments", round.offset));
            }
            if round.offset + mu > r {
                return Err(invalid!("round {k} at offset {} slides past r = {r}", round.offset));
            }
            let mut picked = BTreeSet::new();
            let mut targets = Vec::with_capacity(mu);
            for &i in &round.picks {
                if i >= mu * mu {
                    return Err(invalid!("round {k} picks vector {i}, only {} exist", mu * mu));
                }
                if !picked.insert(i) {
                    return Err(invalid!("round {k} picks vector {i} twice"));
                }
                let position = Self::target(mu, round.offset, i);
                if !occupied.insert(position) {
                    return Err(Error::OccupiedPosition { round: k, position });
                }
                targets.push(position);
            }
            previous = Some(round.offset);
            out.push(targets);
        }
        Ok(out)
    }

    /// Random picks for every round of `shape`; each round chooses `mu`
    /// distinct vectors among those whose target is still free.
    pub fn random_with_shape<R: Rng + ?Sized>(mu: usize, shape: ScheduleShape, rng: &mut R) -> Self {
        let mut occupied = BTreeSet::new();
        let mut rounds = Vec::new();
        for offset in shape.offsets(mu) {
            let free: Vec<usize> = (0..mu * mu).filter(|&i| !occupied.contains(&Self::target(mu, offset, i))).collect();
            if free.len() < mu {
                break;
            }
            let picks: Vec<usize> = free.choose_multiple(rng, mu).copied().collect();
            occupied.extend(picks.iter().map(|&i| Self::target(mu, offset, i)));
            rounds.push(Round { offset, picks });
        }
        ChoiceSchedule { mu, rounds }
    }

    /// Random shape (1..=mu processes of 1..=mu rounds) with random picks.
    pub fn random<R: Rng + ?Sized>(mu: usize, rng: &mut R) -> Self {
        let shape = ScheduleShape { processes: rng.random_range(1..=mu), rounds_per_process: rng.random_range(1..=mu) };
        Self::random_with_shape(mu, shape, rng)
    }
}

/// Write a schedule into `TSYMB^(2r)`; returns the block and the predicted
/// match counts at [`ChoiceSchedule::alignments`].
pub fn build_update_block(v: &VectorMultiset, schedule: &ChoiceSchedule) -> Result<(SymbolString, CountArray)> {
    let mu = v.mu;
    if schedule.mu != mu {
        return Err(invalid!("schedule is for mu = {}, vectors for mu = {mu}", schedule.mu));
    }
    let positions = schedule.positions()?;
    let symbols = Symbols::for_mu(mu)?;
    let mut block = SymbolString::filled(symbols.alphabet, symbols.tsymb, 2 * mu * mu * mu)?;
    let mut profile = Vec::with_capacity(schedule.rounds.len() * mu);
    for (round, targets) in schedule.rounds.iter().zip(&positions) {
        for (&i, &pos) in round.picks.iter().zip(targets) {
            block.set(pos, i as Symbol)?;
        }
        let mut sum = vsum(v, &round.picks)?;
        sum.reverse();
        profile.extend(sum);
    }
    Ok((block, profile.into()))
}

/// Everything fixed about one hard instance.
#[derive(Debug, Clone)]
pub struct HardInstance {
    pub mu: usize,
    pub r: usize,
    pub n: usize,
    pub symbols: Symbols,
    pub seed: u64,
    pub vectors: VectorMultiset,
    pub r_string: SymbolString,
    pub fixed: SymbolString,
}

impl HardInstance {
    pub fn new(mu: usize, n: usize, seed: u64) -> Result<Self> {
        Self::from_vectors(sample_vectors(mu, seed)?, n, seed)
    }

    pub fn from_vectors(vectors: VectorMultiset, n: usize, seed: u64) -> Result<Self> {
        let mu = vectors.mu;
        let symbols = Symbols::for_mu(mu)?;
        let r_string = build_r(&vectors);
        let fixed = build_f(&r_string, n, symbols.psymb)?;
        Ok(HardInstance { mu, r: r_string.len(), n, symbols, seed, vectors, r_string, fixed })
    }

    pub fn copy_positions(&self) -> Vec<usize> {
        copy_positions(self.r, self.n)
    }
}

/// Update blocks of length `2r` whose Hamming arrays against `R` are
/// pairwise distinct, indexed by that array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDictionary {
    r_string: SymbolString,
    blocks: Vec<SymbolString>,
    keys: Vec<CountArray>,
    index: BTreeMap<CountArray, usize>,
    complete: bool,
}

impl BlockDictionary {
    pub fn new(r_string: SymbolString) -> Self {
        BlockDictionary { r_string, blocks: Vec::new(), keys: Vec::new(), index: BTreeMap::new(), complete: true }
    }

    pub fn r_string(&self) -> &SymbolString {
        &self.r_string
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[SymbolString] {
        &self.blocks
    }

    pub fn keys(&self) -> &[CountArray] {
        &self.keys
    }

    /// False when construction ran out of attempts before reaching the
    /// requested size.
    pub fn complete(&self) -> bool {
        self.complete
    }

    pub fn mark_incomplete(&mut self) {
        self.complete = false;
    }

    /// Add `block` unless its Hamming array is already present. Returns
    /// whether it was added.
    pub fn insert(&mut self, block: SymbolString) -> Result<bool> {
        let key = crate::strings::ham_array(&self.r_string, &block)?;
        if self.index.contains_key(&key) {
            return Ok(false);
        }
        self.index.insert(key.clone(), self.blocks.len());
        self.keys.push(key);
        self.blocks.push(block);
        Ok(true)
    }

    pub fn lookup(&self, key: &[u32]) -> Option<usize> {
        self.index.get(&CountArray::from(key.to_vec())).copied()
    }
}

/// Greedily collect `count` blocks with distinct Hamming arrays against `R`:
/// first from random schedules, then from uniformly random blocks over `[r]`.
pub fn build_dictionary(v: &VectorMultiset, count: usize, seed: u64) -> Result<BlockDictionary> {
    if count == 0 {
        return Err(invalid!("dictionary size must be at least 1"));
    }
    let mu = v.mu;
    let r = mu * mu * mu;
    let symbols = Symbols::for_mu(mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dict = BlockDictionary::new(build_r(v));
    let budget = 32 * count + 64;

    for _ in 0..budget {
        if dict.len() == count {
            return Ok(dict);
        }
        let schedule = ChoiceSchedule::random_with_shape(mu, ScheduleShape::standard(mu), &mut rng);
        let (block, _) = build_update_block(v, &schedule)?;
        dict.insert(block)?;
    }
    for _ in 0..budget {
        if dict.len() == count {
            return Ok(dict);
        }
        let block = (0..2 * r).map(|_| rng.random_range(0..r as Symbol)).collect();
        dict.insert(SymbolString::new(symbols.alphabet, block)?)?;
    }
    if dict.len() < count {
        dict.mark_incomplete();
    }
    Ok(dict)
}

/// An update string with dictionary blocks embedded in `[t0, t1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateSequence {
    pub updates: SymbolString,
    /// Dictionary index of each embedded block, in stream order.
    pub blocks: Vec<usize>,
    /// Arrival index of the first embedded block.
    pub first_block: usize,
}

/// `U[t0, t1]` is `outside` padding (on the left, when the interval length is
/// not a multiple of `2r`) followed by uniformly chosen dictionary blocks;
/// every other position holds `outside`.
pub fn build_update_sequence(
    dict: &BlockDictionary,
    n: usize,
    t0: usize,
    t1: usize,
    outside: Symbol,
    seed: u64,
) -> Result<UpdateSequence> {
    if dict.is_empty() {
        return Err(invalid!("dictionary is empty"));
    }
    if !(t0 <= t1 && t1 < n) {
        return Err(invalid!("need t0 <= t1 < n, got ({t0}, {t1}) with n = {n}"));
    }
    let alphabet = dict.r_string.alphabet();
    let block_len = 2 * dict.r_string.len();
    let span = t1 - t0 + 1;
    let first_block = t0 + span % block_len;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<usize> = (0..span / block_len).map(|_| rng.random_range(0..dict.len())).collect();

    let mut updates = SymbolString::filled(alphabet, outside, n)?;
    for (b, &id) in blocks.iter().enumerate() {
        let start = first_block + b * block_len;
        for (k, &s) in dict.blocks[id].iter().enumerate() {
            updates.set(start + k, s)?;
        }
    }
    Ok(UpdateSequence { updates, blocks, first_block })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOutcome {
    Recovered(usize),
    /// Some alignment of this block with the copy of `R` falls outside the
    /// decodable span, or coincides with unknown updates over another copy.
    Skipped,
    /// The recovered Hamming array is not in the dictionary.
    Undecodable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodedSlot {
    pub slot: usize,
    pub start: usize,
    pub outcome: SlotOutcome,
}

/// Recover the blocks embedded in `[t0, t1]` from the outputs `D[t1 + 1, t2]`,
/// where `t2 - t1 = t1 - t0 + 1 = 2^l`.
///
/// `known` gives the updates outside `[t0, t1]` (entries inside are ignored).
/// While block `b` (starting at `p`) is at alignment `i` with the copy of `R`
/// at `n - 2^l`, i.e. at time `p + 2^l - 1 + i`, the output equals the known
/// symbols' mismatches, plus one for every unknown update facing the filler,
/// plus `Hamarray(R, block)[i]`, provided no unknown update faces another
/// copy of `R`. Subtracting a run in which every unknown update is a forced
/// mismatch leaves `Hamarray(R, block)[i] - r`.
#[allow(clippy::too_many_arguments)]
pub fn decode_blocks(
    outputs: &[u32],
    instance: &HardInstance,
    dict: &BlockDictionary,
    known: &[Symbol],
    t0: usize,
    t1: usize,
    t2: usize,
) -> Result<Vec<DecodedSlot>> {
    let n = instance.n;
    let r = instance.r;
    let span = t1.checked_sub(t0).map(|d| d + 1).filter(|&s| t0 <= t1 && t2 > t1 && t2 - t1 == s);
    let span = span.ok_or_else(|| invalid!("need t2 - t1 = t1 - t0 + 1, got ({t0}, {t1}, {t2})"))?;
    if !span.is_power_of_two() || span < 2 * r || span > n {
        return Err(invalid!("interval length {span} must be a power of two in [2r, n] = [{}, {n}]", 2 * r));
    }
    if outputs.len() <= t2 || known.len() <= t2 {
        return Err(invalid!("outputs and known updates must cover t2 = {t2}"));
    }
    if dict.r_string() != &instance.r_string {
        return Err(invalid!("dictionary was built for a different R"));
    }

    // Baseline: window at time t = x covers stream positions x - n + 1 ..= x.
    let first_time = t1 + 1;
    let text: Vec<Symbol> = (first_time as i64 - n as i64 + 1..=t2 as i64)
        .map(|x| match x {
            x if x < 0 => 0,
            x if (t0 as i64..=t1 as i64).contains(&x) => UNKNOWN,
            x => known[x as usize],
        })
        .collect();
    let baseline = mismatch_counts_fast(&instance.fixed, &text);

    let target = n - span;
    let others: Vec<usize> = instance.copy_positions().into_iter().filter(|&q| q != target).collect();
    let block_len = 2 * r;
    let first_block = t0 + span % block_len;
    let slots = span / block_len;

    let mut decoded = Vec::with_capacity(slots);
    for slot in 0..slots {
        let start = first_block + slot * block_len;
        let mut key = Vec::with_capacity(r + 1);
        let mut outcome = None;
        for i in 0..=r {
            let t = start + span - 1 + i;
            if t < first_time || t > t2 {
                outcome = Some(SlotOutcome::Skipped);
                break;
            }
            // F indices facing unknown updates at time t.
            let lo = (t0 + n - 1) as i64 - t as i64;
            let hi = (t1 + n - 1) as i64 - t as i64;
            if others.iter().any(|&q| q as i64 <= hi && (q + r - 1) as i64 >= lo) {
                outcome = Some(SlotOutcome::Skipped);
                break;
            }
            let value = outputs[t] as i64 + r as i64 - baseline[t - first_time] as i64;
            if !(0..=r as i64).contains(&value) {
                outcome = Some(SlotOutcome::Undecodable);
                break;
            }
            key.push(value as u32);
        }
        let outcome = outcome.unwrap_or_else(|| match dict.lookup(&key) {
            Some(id) => SlotOutcome::Recovered(id),
            None => SlotOutcome::Undecodable,
        });
        decoded.push(DecodedSlot { slot, start, outcome });
    }
    Ok(decoded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{sliding_mismatch_counts, Alphabet};

    #[test]
    fn rho_examples() {
        // mu = 3: star = 9
        assert_eq!(encode_rho(&[0, 1, 0], 2, 9), vec![9, 2, 9]);
        assert_eq!(encode_rho(&[1, 1, 0], 7, 9), vec![7, 7, 9]);
        assert_eq!(encode_rho(&[0, 0, 0], 4, 9), vec![9, 9, 9]);
    }

    #[test]
    fn sampling_is_reproducible() {
        assert_eq!(sample_vectors(5, 3).unwrap(), sample_vectors(5, 3).unwrap());
        assert_ne!(sample_vectors(5, 3).unwrap(), sample_vectors(5, 4).unwrap());
        let v = sample_vectors(4, 0).unwrap();
        assert_eq!(v.len(), 16);
        assert!(v.vectors().iter().all(|x| x.len() == 4));
        assert!(sample_vectors(1, 0).is_err());
    }

    #[test]
    fn bit_frequency_is_fair() {
        let v = sample_vectors(100, 9).unwrap();
        let ones: usize = v.vectors().iter().flatten().map(|&b| b as usize).sum();
        let freq = ones as f64 / 1e6;
        assert!((0.48..=0.52).contains(&freq), "{freq}");
    }

    #[test]
    fn r_structure() {
        let v = sample_vectors(2, 1).unwrap();
        let r = build_r(&v);
        assert_eq!(r.len(), 8);
        let v = sample_vectors(4, 2).unwrap();
        let r = build_r(&v);
        let star = Symbols::for_mu(4).unwrap().star;
        for (pos, &s) in r.iter().enumerate() {
            assert!(s == star || s as usize == pos / 4);
        }
        let zeros = v.vectors().iter().flatten().filter(|&&b| b == 0).count();
        assert_eq!(r.iter().filter(|&&s| s == star).count(), zeros);
    }

    #[test]
    fn reserved_symbols() {
        let s = Symbols::for_mu(4).unwrap();
        assert_eq!((s.alphabet.delta(), s.star, s.tsymb, s.psymb), (7, 16, 17, 127));
        let s = Symbols::for_mu(2).unwrap();
        assert_eq!((s.alphabet.delta(), s.psymb), (4, 15));
    }

    #[test]
    fn f_hand_placement() {
        let a = Alphabet::new(2).unwrap();
        let r = SymbolString::new(a, vec![0, 1]).unwrap();
        let f = build_f(&r, 8, 3).unwrap();
        assert_eq!(f.as_slice(), &[0, 1, 3, 3, 0, 1, 3, 3]);
        assert!(build_f(&r, 3, 3).is_err());
    }

    #[test]
    fn f_copy_count() {
        let a = Alphabet::new(3).unwrap();
        for (r_len, n) in [(3usize, 6usize), (4, 8), (5, 100), (7, 1000), (2, 1 << 12)] {
            let r = SymbolString::new(a, (0..r_len as u32).map(|i| i % 6).collect()).unwrap();
            let f = build_f(&r, n, 7).unwrap();
            let scanned = (0..=n - r_len).filter(|&p| &f[p..p + r_len] == r.as_slice()).count();
            assert_eq!(scanned as u32, n.ilog2() - r_len.ilog2(), "r={r_len} n={n}");
        }
    }

    #[test]
    fn vsum_examples() {
        let v = VectorMultiset::new(2, vec![vec![1, 0], vec![1, 1], vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(vsum(&v, &[0, 1]).unwrap(), vec![2, 1]);
        assert_eq!(vsum(&v, &[2, 3]).unwrap(), vec![0, 0]);
        assert!(vsum(&v, &[1, 1]).is_err());
        assert!(vsum(&v, &[9]).is_err());
    }

    #[test]
    fn vsum_counts() {
        let same = VectorMultiset::new(2, vec![vec![1, 0]; 4]).unwrap();
        assert_eq!(count_distinct_vsums(&same, &[true; 4], 100, 0).unwrap(), VsumCount { count: 1, exhaustive: true });
        let all = VectorMultiset::new(2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        // (0,1) (1,0) (1,1) (1,1) (1,2) (2,1)
        assert_eq!(count_distinct_vsums(&all, &[true; 4], 100, 0).unwrap().count, 5);
        assert!(count_distinct_vsums(&all, &[true; 4], 0, 0).is_err());
        let sampled = count_distinct_vsums(&all, &[true; 4], 3, 0).unwrap();
        assert!(!sampled.exhaustive && sampled.count <= 5);
    }

    #[test]
    fn empty_schedule_block() {
        let v = sample_vectors(3, 5).unwrap();
        let (block, profile) = build_update_block(&v, &ChoiceSchedule::empty(3)).unwrap();
        assert!(block.iter().all(|&s| s == 10));
        assert!(profile.is_empty());
        let r = build_r(&v);
        assert!(sliding_mismatch_counts(&r, &block).unwrap().iter().all(|&d| d == 27));
    }

    #[test]
    fn single_round_profile() {
        let v = VectorMultiset::new(
            3,
            vec![
                vec![1, 0, 0],
                vec![1, 1, 0],
                vec![0, 1, 1],
                vec![0, 0, 0],
                vec![1, 1, 1],
                vec![0, 0, 1],
                vec![1, 0, 1],
                vec![0, 1, 0],
                vec![1, 1, 0],
            ],
        )
        .unwrap();
        let schedule = ChoiceSchedule { mu: 3, rounds: vec![Round { offset: 0, picks: vec![0, 1, 2] }] };
        let (block, profile) = build_update_block(&v, &schedule).unwrap();
        // vsum = (2, 2, 1), reversed
        assert_eq!(profile.as_slice(), &[1, 2, 2]);
        let r = build_r(&v);
        let mism = sliding_mismatch_counts(&r, &block).unwrap();
        let observed: Vec<u32> = schedule.alignments().iter().map(|&a| 27 - mism[a]).collect();
        assert_eq!(observed, profile.as_slice());
    }

    #[test]
    fn occupied_position_reports_round() {
        let v = sample_vectors(3, 0).unwrap();
        let schedule = ChoiceSchedule {
            mu: 3,
            rounds: vec![Round { offset: 0, picks: vec![1, 2, 3] }, Round { offset: 3, picks: vec![0, 4, 5] }],
        };
        // round 1 picking 0 at offset 3 lands where round 0 put 1
        assert_eq!(build_update_block(&v, &schedule).unwrap_err(), Error::OccupiedPosition { round: 1, position: 6 });
    }

    #[test]
    fn malformed_schedules_rejected() {
        let bad = [
            vec![Round { offset: 0, picks: vec![0, 1] }],
            vec![Round { offset: 0, picks: vec![0, 0, 1] }],
            vec![Round { offset: 0, picks: vec![0, 1, 9] }],
            vec![Round { offset: 25, picks: vec![0, 1, 2] }],
            vec![Round { offset: 0, picks: vec![0, 1, 2] }, Round { offset: 2, picks: vec![5, 6, 7] }],
        ];
        for rounds in bad {
            assert!(ChoiceSchedule { mu: 3, rounds }.validate().is_err());
        }
    }

    #[test]
    fn standard_shape_offsets() {
        assert_eq!(ScheduleShape::standard(4).offsets(4), vec![0, 5, 10, 15]);
        let shape = ScheduleShape { processes: 2, rounds_per_process: 3 };
        assert_eq!(shape.offsets(3), vec![0, 3, 6, 10, 13, 16]);
    }

    #[test]
    fn dictionary_round_trip() {
        let v = sample_vectors(4, 1).unwrap();
        let dict = build_dictionary(&v, 16, 2).unwrap();
        assert_eq!(dict.len(), 16);
        assert!(dict.complete());
        for (id, block) in dict.blocks().iter().enumerate() {
            let key = crate::strings::ham_array(dict.r_string(), block).unwrap();
            assert_eq!(dict.lookup(&key), Some(id));
        }
        let one = build_dictionary(&v, 1, 0).unwrap();
        assert_eq!(one.len(), 1);
        assert!(build_dictionary(&v, 0, 0).is_err());
    }

    #[test]
    fn update_sequence_layout() {
        let v = sample_vectors(2, 1).unwrap();
        let dict = build_dictionary(&v, 3, 0).unwrap();
        let tsymb = Symbols::for_mu(2).unwrap().tsymb;
        let seq = build_update_sequence(&dict, 64, 10, 25, tsymb, 4).unwrap();
        assert_eq!(seq.blocks.len(), 1);
        assert_eq!(seq.first_block, 10);
        assert_eq!(&seq.updates[10..26], dict.blocks()[seq.blocks[0]].as_slice());
        assert!(seq.updates[..10].iter().chain(&seq.updates[26..]).all(|&s| s == tsymb));
        assert_eq!(seq, build_update_sequence(&dict, 64, 10, 25, tsymb, 4).unwrap());

        let padded = build_update_sequence(&dict, 64, 10, 28, tsymb, 4).unwrap();
        assert_eq!(padded.first_block, 13);
        assert!(build_update_sequence(&BlockDictionary::new(dict.r_string().clone()), 64, 0, 15, tsymb, 0).is_err());
    }

    #[test]
    fn strict_mode() {
        assert!(strict_violation(4).is_none());
        assert!(strict_violation(6).is_none());
        assert!(strict_violation(5).is_some());
        assert!(strict_violation(10).is_some());
    }
}
