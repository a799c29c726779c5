//! The acceptance suite. Each criterion draws its own inputs from `seed` and
//! checks library results against oracles written independently here.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use hds_core::hard::{
    build_dictionary, build_r, build_update_block, build_update_sequence, count_distinct_vsums, decode_blocks,
    sample_vectors, ChoiceSchedule, HardInstance, SlotOutcome, VectorMultiset,
};
use hds_core::matmul::{encode_pattern, encode_text, multiply_via_matching, BinaryMatrix};
use hds_core::probe::{
    attribute_reads, decode_and_replay, encode_it, information_transfer, instrumented_run, interval_tree_analysis,
    InstrumentedRun, TreeNode,
};
use hds_core::strings::{ham_array, match_count_array, sliding_mismatch_counts, sliding_mismatch_counts_fast};
use hds_core::{
    Alphabet, BackendKind, MemoryStore, OfflineCounter, ProbeKind, ProbeLog, ProbeRecord, StreamEngine, Symbol,
    SymbolString,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bench::{log_log_slope, log_ratio_spread, measure};

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "backend equivalence"),
    (2, "offline counter equivalence"),
    (3, "schedule profile law"),
    (4, "dictionary injectivity and decode round-trip"),
    (5, "information transfer definition"),
    (6, "encode and replay"),
    (7, "tree disjointness"),
    (8, "matrix multiplication reduction"),
    (9, "scaling trend"),
    (10, "vector-sum counting"),
];

const BLACKBOX: BackendKind = BackendKind::Blackbox(OfflineCounter::Convolution);

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<46} {}  ({:.1}s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng_for(seed: u64, criterion: u8, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(criterion) << 32 | trial);
    rng
}

fn random_string(rng: &mut ChaCha8Rng, alphabet: Alphabet, len: usize, range: Symbol) -> SymbolString {
    let symbols = (0..len).map(|_| rng.random_range(0..range)).collect();
    SymbolString::new(alphabet, symbols).expect("range within alphabet")
}

pub fn run_criterion(id: u8, seed: u64) -> Option<CriterionResult> {
    let &(id, name) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = match id {
        1 => backend_equivalence(seed),
        2 => offline_equivalence(seed),
        3 => profile_law(seed),
        4 => decode_round_trip(seed),
        5 => it_definition(seed),
        6 => encode_replay(seed),
        7 => tree_disjointness(seed),
        8 => matmul(seed),
        9 => scaling(seed),
        10 => vsum_counting(seed),
        _ => unreachable!(),
    };
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Some(CriterionResult { id, name, passed, detail, elapsed: start.elapsed() })
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|&(id, _)| run_criterion(id, seed)).collect()
}

fn backend_equivalence(seed: u64) -> Outcome {
    let failures: Vec<String> = (0..50u64)
        .into_par_iter()
        .filter_map(|trial| {
            let mut rng = rng_for(seed, 1, trial);
            let n = [1usize << 8, 1 << 10, 1 << 12][trial as usize % 3];
            let delta = [4u32, 8][(trial as usize / 3) % 2];
            let alphabet = Alphabet::new(delta).unwrap();
            // small ranges make matches frequent; full ranges exercise packing
            let range = if trial % 2 == 0 { 1 << delta } else { 3 };
            let f = random_string(&mut rng, alphabet, n, range);
            let extra = rng.random_range(0..n);
            let u = random_string(&mut rng, alphabet, 2 * n + extra, range);
            let run = |backend| {
                let mut engine = StreamEngine::new(f.clone(), backend, MemoryStore::native(32).unwrap()).unwrap();
                engine.run_sequence(&u).unwrap()
            };
            let (naive, blackbox) = (run(BackendKind::Naive), run(BLACKBOX));
            (naive != blackbox).then(|| format!("trial {trial} (n={n}, delta={delta})"))
        })
        .collect();
    ensure(failures.is_empty(), || format!("outputs differ: {}", failures.join(", ")))?;
    Ok("50 pairs identical".into())
}

fn offline_equivalence(seed: u64) -> Outcome {
    let failures: Vec<u64> = (0..200u64)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = rng_for(seed, 2, trial);
            let text_len = rng.random_range(1..=4096usize);
            let pattern_len = rng.random_range(1..=text_len);
            let delta = rng.random_range(1..=10u32);
            let alphabet = Alphabet::new(delta).unwrap();
            let range = rng.random_range(1..=alphabet.size() as Symbol);
            let p = random_string(&mut rng, alphabet, pattern_len, range);
            let t = random_string(&mut rng, alphabet, text_len, range);
            sliding_mismatch_counts_fast(&p, &t).unwrap() != sliding_mismatch_counts(&p, &t).unwrap()
        })
        .collect();
    ensure(failures.is_empty(), || format!("mismatching trials {failures:?}"))?;
    Ok("200 instances identical".into())
}

fn profile_law(seed: u64) -> Outcome {
    let mut alignments = 0usize;
    for mu in [3usize, 4, 6] {
        let v = sample_vectors(mu, seed ^ mu as u64).map_err(|e| e.to_string())?;
        let r = build_r(&v);
        for trial in 0..100u64 {
            let mut rng = rng_for(seed, 3, (mu as u64) << 16 | trial);
            let schedule = ChoiceSchedule::random(mu, &mut rng);
            let (block, _) = build_update_block(&v, &schedule).map_err(|e| format!("mu={mu} trial {trial}: {e}"))?;
            let ham = ham_array(&r, &block).unwrap();
            for round in &schedule.rounds {
                // oracle: column sums of the picked vectors, read backwards
                let expected: Vec<u32> =
                    (0..mu).rev().map(|col| round.picks.iter().map(|&i| v.vectors()[i][col] as u32).sum()).collect();
                let observed: Vec<u32> = (1..=mu).map(|s| (r.len() as u32) - ham[round.offset + s]).collect();
                ensure(observed == expected, || {
                    format!("mu={mu} trial {trial} offset {}: {observed:?} != {expected:?}", round.offset)
                })?;
                alignments += mu;
            }
        }
    }
    Ok(format!("{alignments} scheduled alignments agree"))
}

fn decode_round_trip(seed: u64) -> Outcome {
    let instance = HardInstance::new(4, 1 << 14, seed).map_err(|e| e.to_string())?;
    let dict = build_dictionary(&instance.vectors, 16, seed).map_err(|e| e.to_string())?;
    ensure(dict.len() == 16, || format!("dictionary has only {} blocks", dict.len()))?;
    let keys: BTreeSet<Vec<u32>> =
        dict.blocks().iter().map(|b| ham_array(dict.r_string(), b).unwrap().to_vec()).collect();
    ensure(keys.len() == 16, || "dictionary Hamming arrays collide".into())?;

    let span = 16 * instance.r;
    let results: Vec<Result<(usize, usize), String>> = (0..20u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_for(seed, 4, trial);
            let t0 = rng.random_range(0..=instance.n - 2 * span);
            let (t1, t2) = (t0 + span - 1, t0 + 2 * span - 1);
            let seq = build_update_sequence(&dict, instance.n, t0, t1, instance.symbols.tsymb, rng.random())
                .map_err(|e| e.to_string())?;
            let mut engine =
                StreamEngine::new(instance.fixed.clone(), BLACKBOX, MemoryStore::native(64).unwrap()).unwrap();
            let outputs = engine.run_sequence(&seq.updates).unwrap();
            let mut known = seq.updates.to_vec();
            known[t0..=t1].fill(0);
            let slots = decode_blocks(&outputs, &instance, &dict, &known, t0, t1, t2).map_err(|e| e.to_string())?;
            let mut recovered = 0;
            for s in &slots {
                match s.outcome {
                    SlotOutcome::Recovered(id) if id == seq.blocks[s.slot] => recovered += 1,
                    SlotOutcome::Skipped => {}
                    other => return Err(format!("trial {trial} slot {}: {other:?}", s.slot)),
                }
            }
            Ok((recovered, slots.len()))
        })
        .collect();
    let (mut recovered, mut slots) = (0, 0);
    for r in results {
        let (a, b) = r?;
        recovered += a;
        slots += b;
    }
    ensure(recovered > 0, || "no block was decodable".into())?;
    Ok(format!("{recovered}/{slots} blocks recovered, rest skipped at the boundary"))
}

fn synthetic_log(rng: &mut ChaCha8Rng) -> ProbeLog {
    let n = rng.random_range(2..64u64);
    let addrs = rng.random_range(1..24u64);
    let mut times: Vec<u64> = (0..rng.random_range(0..400)).map(|_| rng.random_range(0..n)).collect();
    times.sort();
    let records = times
        .into_iter()
        .map(|t| ProbeRecord {
            t,
            kind: if rng.random() { ProbeKind::Write } else { ProbeKind::Read },
            addr: rng.random_range(0..addrs),
            value: rng.random_range(0..256),
        })
        .collect();
    ProbeLog { w: 8, n, records }
}

/// Quadratic scan straight from the definition.
fn reference_it(log: &ProbeLog, t0: u64, t1: u64, t2: u64) -> BTreeMap<u64, u64> {
    let recs = &log.records;
    let writes = |c: u64| recs.iter().filter(move |r| r.kind == ProbeKind::Write && r.addr == c);
    let mut out = BTreeMap::new();
    for (k, read) in recs.iter().enumerate() {
        if read.kind != ProbeKind::Read || read.t <= t1 || read.t > t2 {
            continue;
        }
        let c = read.addr;
        let written_first = writes(c).any(|r| r.t >= t0 && r.t <= t1);
        let rewritten = recs[..k].iter().any(|r| r.kind == ProbeKind::Write && r.addr == c && r.t > t1);
        if written_first && !rewritten {
            out.insert(c, writes(c).rfind(|r| r.t <= t1).unwrap().value);
        }
    }
    out
}

fn random_triple(rng: &mut ChaCha8Rng, n: u64) -> (u64, u64, u64) {
    let t1 = rng.random_range(0..n - 1);
    (rng.random_range(0..=t1), t1, rng.random_range(t1 + 1..n))
}

fn it_definition(seed: u64) -> Outcome {
    let mut members = 0;
    for trial in 0..100u64 {
        let mut rng = rng_for(seed, 5, trial);
        let log = synthetic_log(&mut rng);
        let (t0, t1, t2) = random_triple(&mut rng, log.n);
        let it = information_transfer(&log, t0, t1, t2).map_err(|e| e.to_string())?;
        let expected = reference_it(&log, t0, t1, t2);
        ensure(it.cells == expected, || format!("trial {trial} ({t0},{t1},{t2}): {:?} != {expected:?}", it.cells))?;
        members += expected.len();
    }
    Ok(format!("100 logs agree ({members} members in total)"))
}

const REPLAY_N: usize = 1 << 10;
const REPLAY_W: u32 = 16;

/// The instrumented runs shared by criteria 6 and 7.
fn replay_runs(seed: u64) -> Vec<(BackendKind, u64, SymbolString, SymbolString, InstrumentedRun)> {
    [BackendKind::Naive, BLACKBOX]
        .into_iter()
        .flat_map(|backend| (0..100u64).map(move |trial| (backend, trial)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(backend, trial)| {
            let mut rng = rng_for(seed, 6, trial);
            let alphabet = Alphabet::new(4).unwrap();
            let f = random_string(&mut rng, alphabet, REPLAY_N, 4);
            let u = random_string(&mut rng, alphabet, REPLAY_N, 4);
            let run = instrumented_run(backend, &f, &u, REPLAY_W).expect("valid run");
            (backend, trial, f, u, run)
        })
        .collect()
}

fn encode_replay(seed: u64) -> Outcome {
    let runs = replay_runs(seed);
    let outcomes: Vec<Result<usize, String>> = runs
        .par_iter()
        .map(|(backend, trial, f, u, run)| {
            let mut rng = rng_for(seed, 60, *trial);
            let (t0, t1, t2) = random_triple(&mut rng, REPLAY_N as u64);
            let label = format!("{backend} trial {trial} ({t0},{t1},{t2})");
            let it = information_transfer(&run.log, t0, t1, t2).map_err(|e| e.to_string())?;
            let bits = encode_it(&it, REPLAY_W).map_err(|e| e.to_string())?;
            ensure(bits.len() == REPLAY_W as usize * (2 * it.len() + 1), || {
                format!("{label}: encoding length {}", bits.len())
            })?;
            let mut blinded = u.to_vec();
            blinded[t0 as usize..=t1 as usize].fill(0);
            let replayed = decode_and_replay(*backend, f, &blinded, &bits, t0, t1, t2, REPLAY_W, Some(&run.log))
                .map_err(|e| format!("{label}: {e}"))?;
            ensure(replayed.as_slice() == &run.outputs[t1 as usize + 1..=t2 as usize], || {
                format!("{label}: outputs differ")
            })?;
            Ok(it.len())
        })
        .collect();
    let mut cells = 0;
    for o in outcomes {
        cells += o?;
    }
    Ok(format!("200 replays exact, {cells} cells encoded"))
}

/// Nodes whose left half holds `tw` and right half holds `t`, found by
/// walking every level.
fn containing_nodes(tw: u64, t: u64, height: u32) -> Vec<TreeNode> {
    (1..=height)
        .map(|h| TreeNode::new(h, t >> h))
        .filter(|v| tw >= v.t0 && tw <= v.t1 && t > v.t1 && t <= v.t2)
        .collect()
}

fn check_tree(log: &ProbeLog) -> Result<(), String> {
    let report = interval_tree_analysis(log, log.n).map_err(|e| e.to_string())?;
    ensure(report.total <= report.reads, || {
        format!("sum of |IT(v)| = {} exceeds {} reads", report.total, report.reads)
    })?;
    let height = report.leaves.trailing_zeros();
    let mut last_write = BTreeMap::new();
    for (rec, node) in log.records.iter().zip(attribute_reads(log)) {
        match rec.kind {
            ProbeKind::Write => {
                last_write.insert(rec.addr, rec.t);
                ensure(node.is_none(), || "a write was attributed".into())?;
            }
            ProbeKind::Read => {
                let expected =
                    last_write.get(&rec.addr).map(|&tw| containing_nodes(tw, rec.t, height)).unwrap_or_default();
                ensure(expected.len() <= 1, || format!("read at {} fits {} nodes", rec.t, expected.len()))?;
                ensure(node.as_ref() == expected.first(), || format!("read at {} attributed to {node:?}", rec.t))?;
            }
        }
    }
    Ok(())
}

fn tree_disjointness(seed: u64) -> Outcome {
    let runs = replay_runs(seed);
    let checked: Vec<Result<(), String>> = runs.par_iter().map(|(_, _, _, _, run)| check_tree(&run.log)).collect();
    for c in checked {
        c?;
    }
    Ok(format!("{} instrumented runs", runs.len()))
}

fn direct_product(a: &BinaryMatrix, b: &BinaryMatrix) -> Vec<Vec<u32>> {
    (0..a.rows())
        .map(|i| (0..b.cols()).map(|j| (0..a.cols()).map(|k| u32::from(a.get(i, k) & b.get(k, j))).sum()).collect())
        .collect()
}

fn matmul(seed: u64) -> Outcome {
    for trial in 0..200u64 {
        let mut rng = rng_for(seed, 8, trial);
        let (m, l, nb) = loop {
            let dims = (rng.random_range(1..=16usize), rng.random_range(1..=16usize), rng.random_range(1..=16usize));
            if !(dims.0 >= dims.1 + 2 && dims.2 > dims.1) {
                break dims;
            }
        };
        let density = rng.random_range(0.0..1.0);
        let mut entries = |len: usize| -> Vec<u8> { (0..len).map(|_| u8::from(rng.random_bool(density))).collect() };
        let a = BinaryMatrix::new(m, l, entries(m * l)).unwrap();
        let b = BinaryMatrix::new(l, nb, entries(l * nb)).unwrap();
        let got = multiply_via_matching(&a, &b).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(got.product == direct_product(&a, &b), || format!("trial {trial} ({m}x{l}x{nb}) differs"))?;
    }

    let a = BinaryMatrix::from_rows(&[vec![0, 0, 1], vec![1, 0, 1]]).unwrap();
    let b = BinaryMatrix::from_rows(&[vec![0, 1], vec![1, 0], vec![0, 0]]).unwrap();
    let got = multiply_via_matching(&a, &b).map_err(|e| e.to_string())?;
    ensure(got.product == vec![vec![0, 0], vec![0, 1]], || format!("worked example product {:?}", got.product))?;
    let ones: Vec<usize> = got.match_counts.iter().enumerate().filter(|(_, &c)| c != 0).map(|(k, _)| k).collect();
    ensure(ones.len() == 1 && got.match_counts[ones[0]] == 1, || format!("worked example profile {:?}", got.match_counts))?;

    let pattern = encode_pattern(&a);
    let (text, _) = encode_text(&b, 2).unwrap();
    ensure(match_count_array(&pattern, &text).unwrap() == got.match_counts, || "profile not reproducible".into())?;
    Ok(format!("200 products exact; worked example has a single match at alignment {}", ones[0]))
}

pub const SCALING_SIZES: [usize; 4] = [1 << 10, 1 << 12, 1 << 14, 1 << 16];
pub const SCALING_DELTA: u32 = 4;
pub const SCALING_W: u32 = 32;
/// Naive per-arrival cost does not depend on the arrival index, so a fixed
/// sample suffices.
pub const NAIVE_ARRIVALS: usize = 1 << 10;

fn scaling(seed: u64) -> Outcome {
    let measure_all = |backend: BackendKind| -> Result<Vec<_>, String> {
        SCALING_SIZES
            .par_iter()
            .map(|&n| {
                let arrivals = if backend == BackendKind::Naive { NAIVE_ARRIVALS } else { n };
                measure(backend, n, SCALING_DELTA, SCALING_W, arrivals, seed).map_err(|e| e.to_string())
            })
            .collect()
    };
    let blackbox = measure_all(BLACKBOX)?;
    let naive = measure_all(BackendKind::Naive)?;
    let spread = log_ratio_spread(&blackbox);
    let slope = log_log_slope(&naive);
    let table: Vec<String> = blackbox
        .iter()
        .zip(&naive)
        .map(|(b, v)| format!("n=2^{}: {:.1}/{:.1}", b.n.trailing_zeros(), b.amortized, v.amortized))
        .collect();
    let detail = format!(
        "blackbox/log2n spread {spread:.2}x, naive log-log slope {slope:.2} [blackbox/naive amortized {}]",
        table.join(", ")
    );
    let naive_floor = naive.iter().all(|p| p.amortized >= p.n as f64 * SCALING_DELTA as f64 / SCALING_W as f64);
    ensure(spread < 3.0 && slope >= 1.0 - 0.05 && naive_floor, || detail.clone())?;
    Ok(detail)
}

/// Distinct sums over every `mu`-subset of `pool`, by bitmask.
fn enumerate_sums(v: &VectorMultiset, pool: &[usize]) -> u64 {
    let mu = v.mu();
    let mut sums = BTreeSet::new();
    for mask in 0u32..1 << pool.len() {
        if mask.count_ones() as usize == mu {
            let mut acc = vec![0u32; mu];
            for (k, &i) in pool.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    for (a, &b) in acc.iter_mut().zip(&v.vectors()[i]) {
                        *a += u32::from(b);
                    }
                }
            }
            sums.insert(acc);
        }
    }
    sums.len() as u64
}

fn vsum_counting(seed: u64) -> Outcome {
    let mut checks = 0;
    for mu in [2usize, 3] {
        for trial in 0..20u64 {
            let mut rng = rng_for(seed, 10, (mu as u64) << 16 | trial);
            let v = sample_vectors(mu, rng.random()).map_err(|e| e.to_string())?;
            // a chain of shrinking masks
            let mut mask = vec![true; v.len()];
            let mut previous = u64::MAX;
            loop {
                let pool: Vec<usize> = (0..v.len()).filter(|&i| mask[i]).collect();
                let got = count_distinct_vsums(&v, &mask, u64::MAX, 0).map_err(|e| e.to_string())?;
                let expected = enumerate_sums(&v, &pool);
                ensure(got.exhaustive && got.count == expected, || {
                    format!("mu={mu} trial {trial} pool {pool:?}: {} != {expected}", got.count)
                })?;
                ensure(got.count <= previous, || format!("mu={mu} trial {trial}: count grew under a smaller mask"))?;
                previous = got.count;
                checks += 1;
                if pool.is_empty() {
                    break;
                }
                mask[pool[rng.random_range(0..pool.len())]] = false;
            }
        }
    }
    Ok(format!("{checks} masked counts exact and monotone"))
}
