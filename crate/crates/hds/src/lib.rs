//! File formats, the acceptance suite and scaling measurements for
//! `hds-core`, plus the pieces the `hds` binary shares with tests.

pub mod bench;
pub mod formats;
pub mod suite;

/// Worker pool for independent trials, capped by `HDS_THREADS` when set.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("HDS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    builder.build().expect("thread pool")
}
