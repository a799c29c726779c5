//! Amortized probe cost of the backends as `n` grows.

use hds_core::{Alphabet, BackendKind, CellStore, MemoryStore, StreamEngine, Symbol, SymbolString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub backend: BackendKind,
    pub n: usize,
    pub delta: u32,
    pub w: u32,
    pub arrivals: usize,
    pub total_probes: u64,
    pub amortized: f64,
    /// `amortized / log2 n`.
    pub per_log2n: f64,
    /// `amortized / ((delta / w) log2 n)`.
    pub per_model: f64,
    pub level_flushes: Vec<u64>,
    pub level_flush_probes: Vec<u64>,
}

/// Run `arrivals` uniformly random symbols against a uniformly random fixed
/// string of length `n`, counting probes of an uninstrumented store.
pub fn measure(
    backend: BackendKind,
    n: usize,
    delta: u32,
    w: u32,
    arrivals: usize,
    seed: u64,
) -> hds_core::Result<ScalingPoint> {
    let alphabet = Alphabet::new(delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw =
        |len: usize| -> Vec<Symbol> { (0..len).map(|_| rng.random_range(0..=alphabet.max_symbol())).collect() };
    let fixed = SymbolString::new(alphabet, draw(n))?;
    let updates = draw(arrivals);
    let mut engine = StreamEngine::new(fixed, backend, MemoryStore::native(w)?)?;
    for &x in &updates {
        engine.arrive(x)?;
    }
    let total_probes = engine.store().probes();
    let amortized = if arrivals == 0 { 0.0 } else { total_probes as f64 / arrivals as f64 };
    let log2n = (n as f64).log2().max(1.0);
    Ok(ScalingPoint {
        backend,
        n,
        delta,
        w,
        arrivals,
        total_probes,
        amortized,
        per_log2n: amortized / log2n,
        per_model: amortized / (delta as f64 / w as f64 * log2n),
        level_flushes: engine.stats().level_flushes.clone(),
        level_flush_probes: engine.stats().level_flush_probes.clone(),
    })
}

/// Largest over smallest `per_log2n`.
pub fn log_ratio_spread(points: &[ScalingPoint]) -> f64 {
    let (lo, hi) =
        points.iter().map(|p| p.per_log2n).fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if points.is_empty() || lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Least-squares slope of `log amortized` against `log n`.
pub fn log_log_slope(points: &[ScalingPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.amortized.max(f64::MIN_POSITIVE).ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

pub const CSV_HEADER: &str =
    "backend,n,delta,w,arrivals,total_probes,amortized,amortized_per_log2n,amortized_per_model";

pub fn csv_row(p: &ScalingPoint) -> String {
    format!(
        "{},{},{},{},{},{},{:.4},{:.4},{:.4}",
        p.backend, p.n, p.delta, p.w, p.arrivals, p.total_probes, p.amortized, p.per_log2n, p.per_model
    )
}
