use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use hds::bench::{self, ScalingPoint};
use hds::formats::{self, DictionaryFile, GroundTruthFile, FORMAT_VERSION};
use hds::suite::{self, CRITERIA};
use hds_core::engine::reference_outputs;
use hds_core::hard::{build_dictionary, build_update_sequence, strict_violation, HardInstance};
use hds_core::matmul::multiply_via_matching;
use hds_core::probe::{
    decode_and_replay, encode_it, information_transfer, instrumented_run, interval_tree_analysis, probe_stats,
};
use hds_core::{BackendKind, CellStore, MemoryStore, OfflineCounter, StreamEngine, SymbolString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

/// Exact online Hamming distance: instance generation, runs, probe analysis.
#[derive(Parser)]
#[command(name = "hds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a hard instance: F, R, U, dictionary and ground truth.
    Gen {
        #[arg(long)]
        mu: usize,
        #[arg(long)]
        n: usize,
        /// Dictionary size.
        #[arg(long, default_value_t = 16)]
        blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Refuse block lengths with mu - 1 composite.
        #[arg(long)]
        strict: bool,
    },
    /// Stream updates against a fixed string and write the outputs as CSV.
    Run {
        #[arg(long)]
        fixed: PathBuf,
        #[arg(long)]
        updates: PathBuf,
        #[arg(long, default_value = "blackbox", value_parser = parse_backend)]
        backend: BackendKind,
        #[arg(long, default_value_t = 64)]
        w: u32,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cross-check against the other backend (and the definition on small inputs).
        #[arg(long)]
        oracle: bool,
    },
    /// Instrumented run: per-node information transfer, per-arrival probes, replay trials.
    Probe {
        #[arg(long)]
        fixed: PathBuf,
        #[arg(long)]
        updates: PathBuf,
        #[arg(long, default_value = "blackbox", value_parser = parse_backend)]
        backend: BackendKind,
        #[arg(long, default_value_t = 32)]
        w: u32,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        replay_trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Multiply binary matrices through match counting.
    Mm {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Verify {
        #[arg(long, default_value_t = 20240917)]
        seed: u64,
        /// Comma-separated criterion numbers; all when absent.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long, default_value_t = 4)]
        mu: usize,
        #[arg(long)]
        strict: bool,
    },
    /// Amortized probes per arrival across n.
    Bench {
        /// naive, blackbox, blackbox-naive or all.
        #[arg(long, default_value = "all")]
        backend: String,
        #[arg(long, value_delimiter = ',', default_values_t = suite::SCALING_SIZES)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = suite::SCALING_DELTA)]
        delta: u32,
        #[arg(long, default_value_t = suite::SCALING_W)]
        w: u32,
        /// Arrivals per point; n for blackbox and a fixed sample for naive when absent.
        #[arg(long)]
        arrivals: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse().map_err(|e: hds_core::Error| e.to_string())
}

enum Failure {
    Usage(anyhow::Error),
    Verification(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = hds::thread_pool();
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Gen { mu, n, blocks, seed, out_dir, strict } => gen(mu, n, blocks, seed, &out_dir, strict),
        Command::Run { fixed, updates, backend, w, out, oracle } => {
            run(&fixed, &updates, backend, w, out.as_deref(), oracle)
        }
        Command::Probe { fixed, updates, backend, w, out_dir, replay_trials, seed } => {
            probe(&fixed, &updates, backend, w, &out_dir, replay_trials, seed)
        }
        Command::Mm { a, b } => mm(&a, &b),
        Command::Verify { seed, criteria, mu, strict } => verify(seed, &criteria, mu, strict),
        Command::Bench { backend, sizes, delta, w, arrivals, seed, out } => {
            bench_cmd(&backend, &sizes, delta, w, arrivals, seed, out.as_deref())
        }
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Interval length for the embedded blocks: a power of two in `[2r, 16r]`
/// with both halves fitting in `n`.
fn block_span(r: usize, n: usize) -> Option<usize> {
    let mut span = 2 * r.next_power_of_two();
    if 2 * span > n {
        return None;
    }
    while span < 16 * r && 4 * span <= n {
        span *= 2;
    }
    Some(span)
}

fn gen(mu: usize, n: usize, blocks: usize, seed: u64, out_dir: &Path, strict: bool) -> CmdResult {
    if mu < 2 {
        return Err(anyhow!("--mu must be at least 2").into());
    }
    if strict {
        if let Some(why) = strict_violation(mu) {
            return Err(anyhow!("strict mode: {why}").into());
        }
    }
    let instance = HardInstance::new(mu, n, seed)?;
    let span = block_span(instance.r, n)
        .ok_or_else(|| anyhow!("n = {n} is too small to hold two intervals of 2r = {} arrivals", 2 * instance.r))?;
    let t0 = (n - 2 * span) / 2;
    let (t1, t2) = (t0 + span - 1, t0 + 2 * span - 1);
    let dict = build_dictionary(&instance.vectors, blocks, seed)?;
    let seq = build_update_sequence(&dict, n, t0, t1, instance.symbols.tsymb, seed)?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    formats::save_symbol_string(&out_dir.join("fixed.hds"), &instance.fixed)?;
    formats::save_symbol_string(&out_dir.join("r.hds"), &instance.r_string)?;
    formats::save_symbol_string(&out_dir.join("updates.hds"), &seq.updates)?;
    write_text(&out_dir.join("dictionary.json"), &formats::to_json(&DictionaryFile::new(mu, &dict))?)?;
    let truth = GroundTruthFile {
        format_version: FORMAT_VERSION,
        mu,
        n,
        seed,
        t0,
        t1,
        t2,
        block_len: 2 * instance.r,
        first_block: seq.first_block,
        blocks: seq.blocks.clone(),
    };
    write_text(&out_dir.join("ground_truth.json"), &formats::to_json(&truth)?)?;
    if !dict.complete() {
        eprintln!("warning: dictionary has {} of {blocks} requested blocks", dict.len());
    }
    println!("wrote {} (n={n}, r={}, {} blocks in [{t0}, {t1}])", out_dir.display(), instance.r, seq.blocks.len());
    Ok(())
}

fn load_pair(fixed: &Path, updates: &Path) -> anyhow::Result<(SymbolString, SymbolString)> {
    let f = formats::load_symbol_string(fixed)?;
    let u = formats::load_symbol_string(updates)?;
    if f.alphabet() != u.alphabet() {
        return Err(anyhow!(
            "fixed string has delta={} but updates have delta={}",
            f.alphabet().delta(),
            u.alphabet().delta()
        ));
    }
    Ok((f, u))
}

fn run(fixed: &Path, updates: &Path, backend: BackendKind, w: u32, out: Option<&Path>, oracle: bool) -> CmdResult {
    let (f, u) = load_pair(fixed, updates)?;
    let mut engine = StreamEngine::new(f.clone(), backend, MemoryStore::native(w)?)?;
    let mut csv = format!("# format_version={FORMAT_VERSION}\nt,output,probes_this_arrival\n");
    let mut outputs = Vec::with_capacity(u.len());
    for (t, &x) in u.iter().enumerate() {
        let before = engine.store().probes();
        let d = engine.arrive(x)?;
        outputs.push(d);
        writeln!(csv, "{t},{d},{}", engine.store().probes() - before).expect("string write");
    }
    emit(out, &csv)?;
    if oracle {
        let other = match backend {
            BackendKind::Naive => BackendKind::Blackbox(OfflineCounter::Convolution),
            BackendKind::Blackbox(_) => BackendKind::Naive,
        };
        let mut check = StreamEngine::new(f.clone(), other, MemoryStore::native(w)?)?;
        let expected = check.run_sequence(&u)?;
        if let Some(t) = (0..outputs.len()).find(|&t| outputs[t] != expected[t]) {
            return Err(Failure::Verification(format!("{backend} and {other} differ at t={t}")));
        }
        if (f.len() as u128) * (u.len() as u128) <= 50_000_000 && reference_outputs(&f, &u) != outputs {
            return Err(Failure::Verification(format!("{backend} differs from the definition")));
        }
        eprintln!("oracle: {backend} agrees with {other} on {} arrivals", outputs.len());
    }
    Ok(())
}

fn probe(
    fixed: &Path,
    updates: &Path,
    backend: BackendKind,
    w: u32,
    out_dir: &Path,
    replay_trials: usize,
    seed: u64,
) -> CmdResult {
    let (f, u) = load_pair(fixed, updates)?;
    if u.is_empty() {
        return Err(anyhow!("updates file is empty").into());
    }
    if replay_trials > 0 && u.len() < 2 {
        return Err(anyhow!("replay needs at least two arrivals").into());
    }
    let n = u.len() as u64;
    let run = instrumented_run(backend, &f, &u, w)?;
    let report = interval_tree_analysis(&run.log, n)?;
    let stats = probe_stats(&run.log, n);

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut nodes = format!("# format_version={FORMAT_VERSION}\nheight,index,t0,t1,t2,it_size\n");
    for node in &report.nodes {
        let v = node.node;
        writeln!(nodes, "{},{},{},{},{},{}", v.height, v.index, v.t0, v.t1, v.t2, node.size).expect("string write");
    }
    write_text(&out_dir.join("nodes.csv"), &nodes)?;
    let mut arrivals = format!("# format_version={FORMAT_VERSION}\nt,probes\n");
    for (t, p) in stats.per_arrival.iter().enumerate() {
        writeln!(arrivals, "{t},{p}").expect("string write");
    }
    write_text(&out_dir.join("arrivals.csv"), &arrivals)?;
    let log_path = out_dir.join("probes.hpl");
    let file = fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?;
    formats::write_probe_log(&mut BufWriter::new(file), &run.log)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    let mut replays = format!("# format_version={FORMAT_VERSION}\nt0,t1,t2,it_size,encoding_bits,replay_ok\n");
    for _ in 0..replay_trials {
        let t1 = rng.random_range(0..n - 1);
        let (t0, t2) = (rng.random_range(0..=t1), rng.random_range(t1 + 1..n));
        let it = information_transfer(&run.log, t0, t1, t2)?;
        let bits = encode_it(&it, w)?;
        let mut blinded = u.to_vec();
        blinded[t0 as usize..=t1 as usize].fill(0);
        let ok = decode_and_replay(backend, &f, &blinded, &bits, t0, t1, t2, w, Some(&run.log))
            .is_ok_and(|d| d.as_slice() == &run.outputs[t1 as usize + 1..=t2 as usize]);
        passed += usize::from(ok);
        writeln!(replays, "{t0},{t1},{t2},{},{},{ok}", it.len(), bits.len()).expect("string write");
    }
    if replay_trials > 0 {
        write_text(&out_dir.join("replays.csv"), &replays)?;
    }

    println!("backend={backend} n={n} w={w}");
    println!("probes={} reads={} writes={} amortized={:.3}", stats.total, stats.reads, stats.writes, stats.amortized);
    println!("tree: leaves={} sum_it={} attributed_reads={}", report.leaves, report.total, report.attributed_reads);
    if replay_trials > 0 {
        println!("replay: {passed}/{replay_trials} passed");
    }
    if report.total > report.reads {
        return Err(Failure::Verification(format!("sum of |IT(v)| = {} exceeds {} reads", report.total, report.reads)));
    }
    if passed < replay_trials {
        return Err(Failure::Verification(format!("{} replay trials failed", replay_trials - passed)));
    }
    Ok(())
}

fn mm(a: &Path, b: &Path) -> CmdResult {
    let (a, b) = (formats::load_matrix(a)?, formats::load_matrix(b)?);
    let result = multiply_via_matching(&a, &b)?;
    let direct: Vec<Vec<u32>> = (0..a.rows())
        .map(|i| (0..b.cols()).map(|j| (0..a.cols()).map(|k| u32::from(a.get(i, k) & b.get(k, j))).sum()).collect())
        .collect();
    let oracle_match = direct == result.product;
    let report = json!({ "format_version": FORMAT_VERSION, "product": result.product, "oracle_match": oracle_match });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !oracle_match {
        return Err(Failure::Verification("product differs from the direct computation".into()));
    }
    Ok(())
}

fn verify(seed: u64, criteria: &[u8], mu: usize, strict: bool) -> CmdResult {
    let ids: Vec<u8> = if criteria.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { criteria.to_vec() };
    let mut failed = Vec::new();
    for &id in &ids {
        let result = suite::run_criterion(id, seed).ok_or_else(|| anyhow!("no criterion {id}"))?;
        println!("{}", result.line());
        if !result.passed {
            failed.push(id.to_string());
        }
    }
    if strict {
        match strict_violation(mu) {
            Some(why) => {
                println!("strict mu={mu}: VIOLATION ({why})");
                failed.push("strict".into());
            }
            None => println!("strict mu={mu}: ok"),
        }
    }
    if !failed.is_empty() {
        return Err(Failure::Verification(format!("failed: {}", failed.join(", "))));
    }
    Ok(())
}

fn bench_cmd(
    backend: &str,
    sizes: &[usize],
    delta: u32,
    w: u32,
    arrivals: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let backends: Vec<BackendKind> = match backend {
        "all" => vec![BackendKind::Naive, BackendKind::Blackbox(OfflineCounter::Convolution)],
        other => vec![parse_backend(other).map_err(|e| anyhow!(e))?],
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(anyhow!("--sizes must list positive lengths").into());
    }
    let mut csv = format!("# format_version={FORMAT_VERSION}\n{}\n", bench::CSV_HEADER);
    for backend in backends {
        let points: Vec<ScalingPoint> = sizes
            .iter()
            .map(|&n| {
                let count = arrivals.unwrap_or(if backend == BackendKind::Naive { suite::NAIVE_ARRIVALS } else { n });
                bench::measure(backend, n, delta, w, count, seed)
            })
            .collect::<Result<_, _>>()?;
        for p in &points {
            csv.push_str(&bench::csv_row(p));
            csv.push('\n');
        }
        if points.len() > 1 {
            eprintln!(
                "{backend}: amortized/log2n spread {:.2}x, log-log slope {:.2}",
                bench::log_ratio_spread(&points),
                bench::log_log_slope(&points)
            );
        }
    }
    emit(out, &csv)?;
    Ok(())
}
