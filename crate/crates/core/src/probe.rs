//! Information transfer between adjacent time intervals of an instrumented
//! run, its `w`-bit encoding, replay from that encoding, and per-node
//! accounting over the balanced tree on the time axis.
//!
//! Time is the arrival index. Probes made while processing one arrival share
//! its timestamp; their relative order is the order in the log.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::cell::{check_word_bits, word_mask, Addr, CellStore, MemoryStore, ProbeKind, ProbeLog, Word};
use crate::engine::{BackendKind, EngineStats, StreamEngine};
use crate::error::{invalid, Error, Result};
use crate::strings::{bits_for, CountArray, Symbol, SymbolString};

/// Cells carried across `[t0, t1] -> [t1 + 1, t2]`, each with the value it
/// held at the end of arrival `t1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItSet {
    pub t0: u64,
    pub t1: u64,
    pub t2: u64,
    pub cells: BTreeMap<Addr, Word>,
}

impl ItSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn check_triple(log: &ProbeLog, t0: u64, t1: u64, t2: u64) -> Result<()> {
    if !(t0 <= t1 && t1 < t2 && t2 < log.n) {
        return Err(invalid!("need t0 <= t1 < t2 < n, got ({t0}, {t1}, {t2}) with n = {}", log.n));
    }
    Ok(())
}

/// A cell is in `IT(t0, t1, t2)` iff it was written during `[t0, t1]`, then
/// read at some `t` in `[t1 + 1, t2]` with no write to it in `[t1 + 1, t]`
/// before that read. Equivalently: some read in the second interval finds its
/// most recent write inside the first.
pub fn information_transfer(log: &ProbeLog, t0: u64, t1: u64, t2: u64) -> Result<ItSet> {
    check_triple(log, t0, t1, t2)?;
    let mut last_write: BTreeMap<Addr, (u64, Word)> = BTreeMap::new();
    let mut cells = BTreeMap::new();
    for r in &log.records {
        if r.t > t2 {
            break;
        }
        match r.kind {
            ProbeKind::Write => {
                last_write.insert(r.addr, (r.t, r.value));
            }
            ProbeKind::Read if r.t > t1 => {
                if let Some(&(tw, value)) = last_write.get(&r.addr) {
                    if tw >= t0 && tw <= t1 {
                        cells.insert(r.addr, value);
                    }
                }
            }
            ProbeKind::Read => {}
        }
    }
    Ok(ItSet { t0, t1, t2, cells })
}

/// Packed bit string; fields are appended least-significant bit first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64 && value & !word_mask(width.max(1)) == 0);
        for i in 0..width {
            if self.len.is_multiple_of(64) {
                self.words.push(0);
            }
            if (value >> i) & 1 == 1 {
                self.words[self.len / 64] |= 1 << (self.len % 64);
            }
            self.len += 1;
        }
    }

    pub fn get(&self, pos: usize, width: u32) -> Option<u64> {
        if pos + width as usize > self.len {
            return None;
        }
        let mut v = 0u64;
        for i in 0..width as usize {
            let bit = (self.words[(pos + i) / 64] >> ((pos + i) % 64)) & 1;
            v |= bit << i;
        }
        Some(v)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }
}

/// `[|IT|: w bits]` then `[addr: w bits][value: w bits]` per cell in address
/// order; `w * (2|IT| + 1)` bits in total.
pub fn encode_it(it: &ItSet, w: u32) -> Result<BitString> {
    check_word_bits(w)?;
    let size = it.cells.len() as u64;
    if size & !word_mask(w) != 0 {
        return Err(invalid!("{size} cells cannot be counted in a {w}-bit word"));
    }
    let mut bits = BitString::new();
    bits.push(size, w);
    for (&addr, &value) in &it.cells {
        if addr & !word_mask(w) != 0 || value & !word_mask(w) != 0 {
            return Err(invalid!("cell {addr} = {value} does not fit in {w} bits"));
        }
        bits.push(addr, w);
        bits.push(value, w);
    }
    Ok(bits)
}

/// Inverse of [`encode_it`].
pub fn parse_it(bits: &BitString, w: u32) -> Result<BTreeMap<Addr, Word>> {
    check_word_bits(w)?;
    let size = bits.get(0, w).ok_or_else(|| Error::Encoding("missing size word".into()))?;
    let expected = (2 * size as u128 + 1) * w as u128;
    if bits.len() as u128 != expected {
        return Err(Error::Encoding(alloc::format!("{} bits, expected {expected} for {size} cells", bits.len())));
    }
    let mut table = BTreeMap::new();
    for i in 0..size as usize {
        let base = (2 * i + 1) * w as usize;
        let addr = bits.get(base, w).expect("length checked");
        let value = bits.get(base + w as usize, w).expect("length checked");
        if table.insert(addr, value).is_some() {
            return Err(Error::Encoding(alloc::format!("address {addr} appears twice")));
        }
    }
    Ok(table)
}

/// Outputs, probe log and engine bookkeeping of one instrumented run.
#[derive(Debug, Clone)]
pub struct InstrumentedRun {
    pub outputs: CountArray,
    pub log: ProbeLog,
    pub stats: EngineStats,
}

pub fn instrumented_run(
    backend: BackendKind,
    fixed: &SymbolString,
    updates: &[Symbol],
    w: u32,
) -> Result<InstrumentedRun> {
    if w < bits_for(fixed.len().saturating_sub(1) as u64) {
        return Err(invalid!("word size {w} is below log2(n) for n = {}", fixed.len()));
    }
    let mut engine = StreamEngine::new(fixed.clone(), backend, MemoryStore::instrumented(w)?)?;
    let outputs = engine.run_sequence(updates)?;
    let stats = engine.stats().clone();
    let log = engine.into_store().take_log(updates.len() as u64);
    Ok(InstrumentedRun { outputs, log, stats })
}

/// Serves reads from the decoded table until the cell is rewritten.
struct ReplayStore {
    inner: MemoryStore,
    resumed: bool,
    table: BTreeMap<Addr, Word>,
    /// Cells the original run wrote in the skipped interval, when known.
    audit: BTreeSet<Addr>,
    rewritten: BTreeSet<Addr>,
    clock: u64,
    failure: Option<Error>,
}

impl CellStore for ReplayStore {
    fn word_bits(&self) -> u32 {
        self.inner.word_bits()
    }

    fn read(&mut self, addr: Addr) -> Word {
        let value = self.inner.read(addr);
        if !self.resumed {
            return value;
        }
        if let Some(&v) = self.table.get(&addr) {
            return v;
        }
        if self.audit.contains(&addr) && !self.rewritten.contains(&addr) && self.failure.is_none() {
            self.failure = Some(Error::Integrity { t: self.clock, addr });
        }
        value
    }

    fn write(&mut self, addr: Addr, value: Word) {
        if self.resumed {
            self.table.remove(&addr);
            self.rewritten.insert(addr);
        }
        self.inner.write(addr, value);
    }

    fn peek(&self, addr: Addr) -> Word {
        if self.resumed {
            if let Some(&v) = self.table.get(&addr) {
                return v;
            }
        }
        self.inner.peek(addr)
    }

    fn probes(&self) -> u64 {
        self.inner.probes()
    }

    fn begin_arrival(&mut self, t: u64) {
        self.clock = t;
        self.inner.begin_arrival(t);
    }
}

/// Recompute `D[t1 + 1, t2]` knowing only the updates outside `[t0, t1]`
/// and the encoded information transfer: simulate `[0, t0 - 1]`, skip the
/// first interval, then resume while answering reads of encoded cells from
/// the encoding (an encoded cell is dropped as soon as it is written).
///
/// `updates` must cover `[0, t2]`; its entries in `[t0, t1]` are never read.
/// When `audit` (the original log) is supplied, a read of a cell written in
/// `[t0, t1]` that the encoding does not cover is an [`Error::Integrity`].
#[allow(clippy::too_many_arguments)]
pub fn decode_and_replay(
    backend: BackendKind,
    fixed: &SymbolString,
    updates: &[Symbol],
    encoding: &BitString,
    t0: u64,
    t1: u64,
    t2: u64,
    w: u32,
    audit: Option<&ProbeLog>,
) -> Result<CountArray> {
    if !(t0 <= t1 && t1 < t2) || (updates.len() as u64) <= t2 {
        return Err(invalid!("need t0 <= t1 < t2 < |updates|, got ({t0}, {t1}, {t2}) with {} updates", updates.len()));
    }
    let table = parse_it(encoding, w)?;
    let audit = audit
        .map(|log| {
            log.records
                .iter()
                .filter(|r| r.kind == ProbeKind::Write && r.t >= t0 && r.t <= t1)
                .map(|r| r.addr)
                .collect()
        })
        .unwrap_or_default();
    let store = ReplayStore {
        inner: MemoryStore::native(w)?,
        resumed: false,
        table: BTreeMap::new(),
        audit,
        rewritten: BTreeSet::new(),
        clock: 0,
        failure: None,
    };
    let mut engine = StreamEngine::new(fixed.clone(), backend, store)?;
    for &x in &updates[..t0 as usize] {
        engine.arrive(x)?;
    }
    {
        let store = engine.store_mut();
        store.resumed = true;
        store.table = table;
    }
    engine.skip_to(t1 + 1);
    let mut outputs = Vec::with_capacity((t2 - t1) as usize);
    for &x in &updates[(t1 + 1) as usize..=t2 as usize] {
        outputs.push(engine.arrive(x)?);
        if let Some(err) = engine.store_mut().failure.take() {
            return Err(err);
        }
    }
    Ok(outputs.into())
}

/// One internal node of the time-axis tree: its left subtree spans
/// `[t0, t1]`, its right subtree `[t1 + 1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    /// Height above the leaves (1 for parents of leaves).
    pub height: u32,
    pub index: u64,
    pub t0: u64,
    pub t1: u64,
    pub t2: u64,
}

impl TreeNode {
    pub fn new(height: u32, index: u64) -> Self {
        let t0 = index << height;
        TreeNode { height, index, t0, t1: t0 + (1 << (height - 1)) - 1, t2: t0 + (1 << height) - 1 }
    }

    /// Lowest common ancestor of leaves `a != b`.
    pub fn lca(a: u64, b: u64) -> Self {
        debug_assert_ne!(a, b);
        let height = bits_for(a ^ b);
        Self::new(height, a >> height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeTransfer {
    pub node: TreeNode,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeReport {
    /// Number of leaves: the time axis rounded up to a power of two.
    pub leaves: u64,
    /// Every internal node, bottom level first, left to right.
    pub nodes: Vec<NodeTransfer>,
    pub total: u64,
    pub reads: u64,
    /// Reads whose most recent write happened at an earlier arrival.
    pub attributed_reads: u64,
}

/// For each record, the node a read is charged to: the LCA of the leaf of
/// the cell's most recent write and the leaf of the read. Writes, reads of
/// never-written cells and reads of cells written earlier in the same
/// arrival are charged to no node.
pub fn attribute_reads(log: &ProbeLog) -> Vec<Option<TreeNode>> {
    let mut last_write: BTreeMap<Addr, u64> = BTreeMap::new();
    log.records
        .iter()
        .map(|r| match r.kind {
            ProbeKind::Write => {
                last_write.insert(r.addr, r.t);
                None
            }
            ProbeKind::Read => match last_write.get(&r.addr) {
                Some(&tw) if tw < r.t => Some(TreeNode::lca(tw, r.t)),
                _ => None,
            },
        })
        .collect()
}

/// `|IT(v)|` for every internal node `v`, computed in one pass by charging
/// each read to its LCA node: `c` is in `IT(v)` exactly when some read of
/// `c` is charged to `v`.
pub fn interval_tree_analysis(log: &ProbeLog, n: u64) -> Result<TreeReport> {
    if log.records.iter().any(|r| r.t >= n) {
        return Err(invalid!("log has probes at or after arrival {n}"));
    }
    let leaves = n.max(1).next_power_of_two();
    let height = leaves.trailing_zeros();
    let mut members: BTreeMap<(u32, u64), BTreeSet<Addr>> = BTreeMap::new();
    let mut attributed = 0u64;
    for (record, node) in log.records.iter().zip(attribute_reads(log)) {
        if let Some(node) = node {
            attributed += 1;
            members.entry((node.height, node.index)).or_default().insert(record.addr);
        }
    }
    let mut nodes = Vec::with_capacity(leaves as usize);
    for h in 1..=height {
        for index in 0..(leaves >> h) {
            let size = members.get(&(h, index)).map_or(0, |s| s.len() as u64);
            nodes.push(NodeTransfer { node: TreeNode::new(h, index), size });
        }
    }
    let total = nodes.iter().map(|n| n.size).sum();
    Ok(TreeReport { leaves, nodes, total, reads: log.reads(), attributed_reads: attributed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStats {
    pub per_arrival: Vec<u64>,
    pub reads: u64,
    pub writes: u64,
    pub total: u64,
    /// `total / n`, or 0 for an empty run.
    pub amortized: f64,
}

pub fn probe_stats(log: &ProbeLog, n: u64) -> ProbeStats {
    let mut per_arrival = vec![0u64; n as usize];
    let (mut reads, mut writes) = (0, 0);
    for r in &log.records {
        if let Some(slot) = per_arrival.get_mut(r.t as usize) {
            *slot += 1;
        }
        match r.kind {
            ProbeKind::Read => reads += 1,
            ProbeKind::Write => writes += 1,
        }
    }
    let total = reads + writes;
    let amortized = if n == 0 { 0.0 } else { total as f64 / n as f64 };
    ProbeStats { per_arrival, reads, writes, total, amortized }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::ProbeRecord;

    fn rec(t: u64, kind: ProbeKind, addr: Addr, value: Word) -> ProbeRecord {
        ProbeRecord { t, kind, addr, value }
    }

    fn log(n: u64, records: Vec<ProbeRecord>) -> ProbeLog {
        ProbeLog { w: 64, n, records }
    }

    #[test]
    fn write_then_read_is_transferred() {
        let l = log(10, vec![rec(2, ProbeKind::Write, 5, 77), rec(7, ProbeKind::Read, 5, 77)]);
        let it = information_transfer(&l, 0, 3, 8).unwrap();
        assert_eq!(it.cells.get(&5), Some(&77));
    }

    #[test]
    fn overwrite_before_read_is_not_transferred() {
        let l = log(
            10,
            vec![rec(2, ProbeKind::Write, 5, 77), rec(6, ProbeKind::Write, 5, 1), rec(7, ProbeKind::Read, 5, 1)],
        );
        assert!(information_transfer(&l, 0, 3, 8).unwrap().is_empty());
    }

    #[test]
    fn same_arrival_order_matters() {
        // Read then write at t = 6 still transfers; write then read does not.
        let a = log(
            10,
            vec![rec(1, ProbeKind::Write, 5, 3), rec(6, ProbeKind::Read, 5, 3), rec(6, ProbeKind::Write, 5, 4)],
        );
        assert_eq!(information_transfer(&a, 0, 3, 8).unwrap().len(), 1);
        let b = log(
            10,
            vec![rec(1, ProbeKind::Write, 5, 3), rec(6, ProbeKind::Write, 5, 4), rec(6, ProbeKind::Read, 5, 4)],
        );
        assert_eq!(information_transfer(&b, 0, 3, 8).unwrap().len(), 0);
    }

    #[test]
    fn value_is_last_write_of_first_interval() {
        let l = log(
            10,
            vec![rec(0, ProbeKind::Write, 9, 1), rec(2, ProbeKind::Write, 9, 2), rec(5, ProbeKind::Read, 9, 2)],
        );
        assert_eq!(information_transfer(&l, 0, 3, 8).unwrap().cells[&9], 2);
    }

    #[test]
    fn malformed_triples_rejected() {
        let l = log(10, vec![]);
        assert!(information_transfer(&l, 4, 3, 8).is_err());
        assert!(information_transfer(&l, 0, 3, 3).is_err());
        assert!(information_transfer(&l, 0, 3, 10).is_err());
    }

    #[test]
    fn encoding_lengths() {
        let empty = ItSet { t0: 0, t1: 0, t2: 1, cells: BTreeMap::new() };
        assert_eq!(encode_it(&empty, 64).unwrap().len(), 64);
        let three = ItSet { t0: 0, t1: 0, t2: 1, cells: [(1, 10), (4, 40), (9, 90)].into_iter().collect() };
        let bits = encode_it(&three, 64).unwrap();
        assert_eq!(bits.len(), 448);
        assert_eq!(parse_it(&bits, 64).unwrap(), three.cells);
        let narrow = encode_it(&three, 7).unwrap();
        assert_eq!(narrow.len(), 49);
        assert_eq!(parse_it(&narrow, 7).unwrap(), three.cells);
    }

    #[test]
    fn oversized_cells_rejected() {
        let it = ItSet { t0: 0, t1: 0, t2: 1, cells: [(300, 1)].into_iter().collect() };
        assert!(encode_it(&it, 8).is_err());
        let full = ItSet { t0: 0, t1: 0, t2: 1, cells: (0..4).map(|a| (a, 0)).collect() };
        assert!(encode_it(&full, 2).is_err());
    }

    #[test]
    fn truncated_encoding_rejected() {
        let mut bits = BitString::new();
        bits.push(2, 8);
        bits.push(1, 8);
        assert!(matches!(parse_it(&bits, 8), Err(Error::Encoding(_))));
    }

    #[test]
    fn lca_nodes() {
        assert_eq!(TreeNode::lca(0, 1), TreeNode { height: 1, index: 0, t0: 0, t1: 0, t2: 1 });
        assert_eq!(TreeNode::lca(2, 5), TreeNode { height: 3, index: 0, t0: 0, t1: 3, t2: 7 });
        assert_eq!(TreeNode::lca(4, 6), TreeNode { height: 2, index: 1, t0: 4, t1: 5, t2: 7 });
    }

    #[test]
    fn two_leaf_tree() {
        let l =
            log(2, vec![rec(0, ProbeKind::Write, 3, 1), rec(1, ProbeKind::Read, 3, 1), rec(1, ProbeKind::Read, 4, 0)]);
        let report = interval_tree_analysis(&l, 2).unwrap();
        assert_eq!(report.nodes.len(), 1);
        assert_eq!(report.nodes[0].size, information_transfer(&l, 0, 0, 1).unwrap().len() as u64);
        assert_eq!(report.total, 1);
        assert_eq!(report.reads, 2);
        assert_eq!(report.attributed_reads, 1);
    }

    #[test]
    fn empty_stats() {
        let s = probe_stats(&log(0, vec![]), 0);
        assert_eq!((s.total, s.amortized), (0, 0.0));
        assert!(s.per_arrival.is_empty());
    }
}
