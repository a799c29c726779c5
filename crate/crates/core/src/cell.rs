//! Word-addressed memory of `w`-bit cells, with optional probe logging.
//!
//! Backends keep *all* of their mutable state in a [`CellStore`]; the only
//! thing they may hold outside it is the fixed string and constants derived
//! from it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

pub type Addr = u64;
pub type Word = u64;

pub trait CellStore {
    fn word_bits(&self) -> u32;

    fn read(&mut self, addr: Addr) -> Word;

    fn write(&mut self, addr: Addr, value: Word);

    /// Inspect a cell without counting a probe.
    fn peek(&self, addr: Addr) -> Word;

    /// Total reads plus writes so far.
    fn probes(&self) -> u64;

    /// Called by the engine before it starts processing arrival `t`.
    fn begin_arrival(&mut self, _t: u64) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProbeKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProbeRecord {
    /// Arrival index during which the probe happened.
    pub t: u64,
    pub kind: ProbeKind,
    pub addr: Addr,
    pub value: Word,
}

/// Every probe of one run, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProbeLog {
    pub w: u32,
    /// Length of the time axis (number of arrivals).
    pub n: u64,
    pub records: Vec<ProbeRecord>,
}

impl ProbeLog {
    pub fn reads(&self) -> u64 {
        self.records.iter().filter(|r| r.kind == ProbeKind::Read).count() as u64
    }
}

pub(crate) fn word_mask(w: u32) -> Word {
    if w == 64 {
        Word::MAX
    } else {
        (1 << w) - 1
    }
}

pub(crate) fn check_word_bits(w: u32) -> Result<()> {
    if w == 0 || w > 64 {
        return Err(invalid!("word size must be in 1..=64 bits, got {w}"));
    }
    Ok(())
}

/// Vec-backed cell memory. Unwritten cells read as zero.
#[derive(Debug, Clone)]
pub struct MemoryStore {
    w: u32,
    cells: Vec<Word>,
    probes: u64,
    clock: u64,
    log: Option<Vec<ProbeRecord>>,
}

impl MemoryStore {
    pub fn native(w: u32) -> Result<Self> {
        check_word_bits(w)?;
        Ok(MemoryStore { w, cells: Vec::new(), probes: 0, clock: 0, log: None })
    }

    pub fn instrumented(w: u32) -> Result<Self> {
        let mut store = Self::native(w)?;
        store.log = Some(Vec::new());
        Ok(store)
    }

    pub fn is_instrumented(&self) -> bool {
        self.log.is_some()
    }

    /// Drain the probe log, stamping it with the time-axis length `n`.
    pub fn take_log(&mut self, n: u64) -> ProbeLog {
        ProbeLog { w: self.w, n, records: self.log.as_mut().map(core::mem::take).unwrap_or_default() }
    }

    fn check_addr(&self, addr: Addr) {
        assert!(addr & !word_mask(self.w) == 0, "address {addr} does not fit in {} bits", self.w);
    }
}

impl CellStore for MemoryStore {
    fn word_bits(&self) -> u32 {
        self.w
    }

    fn read(&mut self, addr: Addr) -> Word {
        self.check_addr(addr);
        self.probes += 1;
        let value = self.peek(addr);
        if let Some(log) = self.log.as_mut() {
            log.push(ProbeRecord { t: self.clock, kind: ProbeKind::Read, addr, value });
        }
        value
    }

    fn write(&mut self, addr: Addr, value: Word) {
        self.check_addr(addr);
        assert!(value & !word_mask(self.w) == 0, "value {value} does not fit in {} bits", self.w);
        self.probes += 1;
        let idx = addr as usize;
        if idx >= self.cells.len() {
            self.cells.resize(idx + 1, 0);
        }
        self.cells[idx] = value;
        if let Some(log) = self.log.as_mut() {
            log.push(ProbeRecord { t: self.clock, kind: ProbeKind::Write, addr, value });
        }
    }

    fn peek(&self, addr: Addr) -> Word {
        self.cells.get(addr as usize).copied().unwrap_or(0)
    }

    fn probes(&self) -> u64 {
        self.probes
    }

    fn begin_arrival(&mut self, t: u64) {
        self.clock = t;
    }
}

/// Fixed-width unsigned fields packed `floor(w / width)` per cell, starting
/// at `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackedArray {
    base: Addr,
    len: usize,
    width: u32,
    per_cell: usize,
}

impl PackedArray {
    pub fn new(base: Addr, len: usize, width: u32, w: u32) -> Result<Self> {
        if width == 0 || width > w {
            return Err(invalid!("field width {width} must be in 1..={w}"));
        }
        Ok(PackedArray { base, len, width, per_cell: (w / width) as usize })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn per_cell(&self) -> usize {
        self.per_cell
    }

    pub fn cells(&self) -> u64 {
        self.len.div_ceil(self.per_cell) as u64
    }

    /// One past the last address used.
    pub fn end(&self) -> Addr {
        self.base + self.cells()
    }

    fn locate(&self, index: usize) -> (Addr, u32) {
        debug_assert!(index < self.len);
        (self.base + (index / self.per_cell) as Addr, (index % self.per_cell) as u32 * self.width)
    }

    fn mask(&self) -> Word {
        word_mask(self.width)
    }

    pub fn get<S: CellStore + ?Sized>(&self, store: &mut S, index: usize) -> Word {
        let (addr, shift) = self.locate(index);
        (store.read(addr) >> shift) & self.mask()
    }

    pub fn peek<S: CellStore + ?Sized>(&self, store: &S, index: usize) -> Word {
        let (addr, shift) = self.locate(index);
        (store.peek(addr) >> shift) & self.mask()
    }

    pub fn set<S: CellStore + ?Sized>(&self, store: &mut S, index: usize, value: Word) {
        debug_assert!(value & !self.mask() == 0);
        let (addr, shift) = self.locate(index);
        let old = store.read(addr);
        store.write(addr, (old & !(self.mask() << shift)) | (value << shift));
    }

    /// Fields `start..start + count`, reading each touched cell once.
    pub fn read_range<S: CellStore + ?Sized>(&self, store: &mut S, start: usize, count: usize) -> Vec<Word> {
        assert!(start + count <= self.len);
        let mut out = Vec::with_capacity(count);
        let mut cached: Option<(Addr, Word)> = None;
        for index in start..start + count {
            let (addr, shift) = self.locate(index);
            let word = match cached {
                Some((a, v)) if a == addr => v,
                _ => {
                    let v = store.read(addr);
                    cached = Some((addr, v));
                    v
                }
            };
            out.push((word >> shift) & self.mask());
        }
        out
    }

    /// Overwrite every field; whole cells are written without being read.
    pub fn write_all<S: CellStore + ?Sized>(&self, store: &mut S, values: &[Word]) {
        assert_eq!(values.len(), self.len);
        let mut words = vec![0 as Word; self.cells() as usize];
        for (index, &value) in values.iter().enumerate() {
            debug_assert!(value & !self.mask() == 0);
            let (addr, shift) = self.locate(index);
            words[(addr - self.base) as usize] |= value << shift;
        }
        for (offset, word) in words.into_iter().enumerate() {
            store.write(self.base + offset as Addr, word);
        }
    }
}
