//! The online problem: keep the last `n` arrivals and report their Hamming
//! distance to a fixed string after every arrival.
//!
//! Two backends share one memory layout in a [`CellStore`]:
//!
//! * `Naive` rescans the whole packed window on every arrival.
//! * `Blackbox` is the amortized offline-to-online reduction. The fixed
//!   string (left-padded to `N = 2^L`) is cut from the right into the last
//!   symbol plus pieces `P_j = F[N - 2^(j+1), N - 2^j - 1]`, `j < L`. Every
//!   `2^j` arrivals, level `j` runs one offline mismatch count of `P_j`
//!   against the `2^(j+1) - 1` most recent symbols and queues the match counts
//!   its piece contributes to each of the next `2^j` outputs.
//!
//! Cell layout: `0` holds the arrival phase `t mod N`, `1` a flag set once the
//! phase has wrapped, then the packed ring of the last `N` symbols, then one
//! packed queue of `2^j` counts per level.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cell::{Addr, CellStore, PackedArray, Word};
use crate::error::{invalid, Error, Result};
use crate::strings::{bits_for, mismatch_counts_fast, mismatch_counts_naive, CountArray, Symbol, SymbolString};

/// Left padding of the fixed string. Outside every alphabet, so it never matches.
const PAD: Symbol = Symbol::MAX;

const PHASE_CELL: Addr = 0;
const WRAPPED_CELL: Addr = 1;
const RING_BASE: Addr = 2;

/// Which offline mismatch counter a blackbox flush calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OfflineCounter {
    Naive,
    #[default]
    Convolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Naive,
    Blackbox(OfflineCounter),
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Naive => f.write_str("naive"),
            BackendKind::Blackbox(OfflineCounter::Convolution) => f.write_str("blackbox"),
            BackendKind::Blackbox(OfflineCounter::Naive) => f.write_str("blackbox-naive"),
        }
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(BackendKind::Naive),
            "blackbox" => Ok(BackendKind::Blackbox(OfflineCounter::Convolution)),
            "blackbox-naive" => Ok(BackendKind::Blackbox(OfflineCounter::Naive)),
            other => Err(invalid!("unknown backend {other:?} (expected naive or blackbox)")),
        }
    }
}

/// Host-side bookkeeping; not part of the algorithm's state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub level_flushes: Vec<u64>,
    pub level_flush_probes: Vec<u64>,
}

pub struct StreamEngine<S: CellStore> {
    fixed: SymbolString,
    pattern: Vec<Symbol>,
    n: usize,
    levels: u32,
    backend: BackendKind,
    store: S,
    clock: u64,
    ring: PackedArray,
    queues: Vec<PackedArray>,
    /// Matches of `P_j` against an all-zero text: level `j`'s contribution
    /// before its first flush.
    zero_matches: Vec<u32>,
    stats: EngineStats,
}

impl<S: CellStore> StreamEngine<S> {
    pub fn new(fixed: SymbolString, backend: BackendKind, store: S) -> Result<Self> {
        if fixed.is_empty() {
            return Err(invalid!("fixed string must be non-empty"));
        }
        let n = fixed.len();
        let size = n.next_power_of_two();
        let levels = size.trailing_zeros();
        let w = store.word_bits();
        let delta = fixed.alphabet().delta();
        if w < bits_for(n as u64 - 1) {
            return Err(invalid!("word size {w} is below log2(n) for n = {n}"));
        }
        if delta > w {
            return Err(invalid!("symbols of {delta} bits do not fit in {w}-bit cells"));
        }

        let mut pattern = vec![PAD; size - n];
        pattern.extend_from_slice(&fixed);

        let ring = PackedArray::new(RING_BASE, size, delta, w)?;
        let mut queues = Vec::new();
        let mut zero_matches = Vec::new();
        if matches!(backend, BackendKind::Blackbox(_)) {
            let count_bits = bits_for((size / 2) as u64).max(1);
            let mut base = ring.end();
            for j in 0..levels {
                let piece = 1usize << j;
                let queue = PackedArray::new(base, piece, count_bits, w)?;
                base = queue.end();
                queues.push(queue);
                let p = &pattern[size - 2 * piece..size - piece];
                zero_matches.push(p.iter().filter(|&&s| s == 0).count() as u32);
            }
        }
        let end = queues.last().map_or(ring.end(), |q| q.end());
        if w < 64 && end > (1u64 << w) {
            return Err(invalid!("{end} cells are not addressable with {w}-bit words"));
        }

        Ok(StreamEngine {
            fixed,
            pattern,
            n,
            levels,
            backend,
            store,
            clock: 0,
            ring,
            queues,
            zero_matches,
            stats: EngineStats {
                level_flushes: vec![0; levels as usize],
                level_flush_probes: vec![0; levels as usize],
            },
        })
    }

    pub fn fixed(&self) -> &SymbolString {
        &self.fixed
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Internal window length: `n` rounded up to a power of two.
    pub fn padded_len(&self) -> usize {
        self.pattern.len()
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn backend(&self) -> BackendKind {
        self.backend
    }

    /// Number of arrivals processed so far.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut S {
        &mut self.store
    }

    pub fn into_store(self) -> S {
        self.store
    }

    /// Move the host-side arrival counter without touching any cell. Used
    /// when the state for arrival `t` is supplied from outside.
    pub fn skip_to(&mut self, t: u64) {
        self.clock = t;
    }

    /// Process one arrival and return `Ham(F, S)` for the updated window.
    pub fn arrive(&mut self, x: Symbol) -> Result<u32> {
        self.fixed.alphabet().check(x)?;
        self.store.begin_arrival(self.clock);
        let size = self.pattern.len();
        let phase = self.store.read(PHASE_CELL) as usize;
        assert!(phase < size, "phase cell holds {phase}, window is {size}");
        self.ring.set(&mut self.store, phase, Word::from(x));

        let matches = match self.backend {
            BackendKind::Naive => {
                let window = self.ring.read_range(&mut self.store, 0, size);
                self.pattern
                    .iter()
                    .enumerate()
                    .filter(|&(k, &f)| Word::from(f) == window[(phase + 1 + k) % size])
                    .count() as u32
            }
            BackendKind::Blackbox(counter) => {
                let wrapped = self.store.read(WRAPPED_CELL) != 0;
                let mut matches = u32::from(self.pattern[size - 1] == x);
                for j in 0..self.levels as usize {
                    let piece = 1usize << j;
                    matches += if !wrapped && phase < piece {
                        self.zero_matches[j]
                    } else {
                        self.queues[j].get(&mut self.store, phase % piece) as u32
                    };
                }
                for j in 0..self.levels {
                    if (phase + 1).is_multiple_of(1usize << j) {
                        self.level_flush(j, phase, counter);
                    }
                }
                if phase + 1 == size && !wrapped {
                    self.store.write(WRAPPED_CELL, 1);
                }
                matches
            }
        };

        self.store.write(PHASE_CELL, ((phase + 1) % size) as Word);
        self.clock += 1;
        Ok(self.n as u32 - matches)
    }

    /// Recompute level `j`'s queue from the `2^(j+1) - 1` most recent symbols,
    /// the newest of which sits at ring slot `phase`.
    fn level_flush(&mut self, j: u32, phase: usize, counter: OfflineCounter) {
        let piece = 1usize << j;
        assert_eq!((phase + 1) % piece, 0, "level {j} flushed off its period");
        let before = self.store.probes();
        let size = self.pattern.len();
        let block_len = 2 * piece - 1;
        let start = (phase + size + 1 - block_len) % size;
        let raw = if start + block_len <= size {
            self.ring.read_range(&mut self.store, start, block_len)
        } else {
            let mut head = self.ring.read_range(&mut self.store, start, size - start);
            head.extend(self.ring.read_range(&mut self.store, 0, block_len - (size - start)));
            head
        };
        let text: Vec<Symbol> = raw.into_iter().map(|v| v as Symbol).collect();

        let p = &self.pattern[size - 2 * piece..size - piece];
        let mismatches = match counter {
            OfflineCounter::Naive => mismatch_counts_naive(p, &text),
            OfflineCounter::Convolution => mismatch_counts_fast(p, &text),
        };
        let matches: Vec<Word> = mismatches.iter().map(|&c| (piece as u32 - c) as Word).collect();
        self.queues[j as usize].write_all(&mut self.store, &matches);

        self.stats.level_flushes[j as usize] += 1;
        self.stats.level_flush_probes[j as usize] += self.store.probes() - before;
    }

    /// The current window `S`, oldest symbol first, read without probing.
    pub fn window(&self) -> Vec<Symbol> {
        let size = self.pattern.len();
        let phase = self.store.peek(PHASE_CELL) as usize;
        (size - self.n..size).map(|k| self.ring.peek(&self.store, (phase + k) % size) as Symbol).collect()
    }

    /// Feed a whole update string to a fresh engine; entry `t` is the output
    /// after arrival `t`.
    pub fn run_sequence(&mut self, updates: &[Symbol]) -> Result<CountArray> {
        if self.clock != 0 {
            return Err(invalid!("run_sequence needs a fresh engine (clock is {})", self.clock));
        }
        for &x in updates {
            self.fixed.alphabet().check(x)?;
        }
        updates.iter().map(|&x| self.arrive(x)).collect::<Result<Vec<_>>>().map(CountArray::from)
    }
}

/// Reference for a whole run: `D[t] = Ham(F, last n symbols of 0^n ++ U[0..=t])`.
pub fn reference_outputs(fixed: &[Symbol], updates: &[Symbol]) -> Vec<u32> {
    let n = fixed.len();
    let mut stream = vec![0 as Symbol; n];
    stream.extend_from_slice(updates);
    (0..updates.len())
        .map(|t| {
            let window = &stream[t + 1..t + 1 + n];
            fixed.iter().zip(window).filter(|(a, b)| a != b).count() as u32
        })
        .collect()
}
