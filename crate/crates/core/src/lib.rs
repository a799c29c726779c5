//! Exact online Hamming distance over a stream, the hard instances used to
//! bound its cell-probe complexity, and tooling that measures probes and
//! information transfer of concrete algorithms.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! the verification suite live in the companion `hds` crate.

#![no_std]

extern crate alloc;

pub mod cell;
pub mod engine;
pub mod error;
pub mod hard;
pub mod matmul;
mod ntt;
pub mod probe;
pub mod strings;

pub use cell::{Addr, CellStore, MemoryStore, PackedArray, ProbeKind, ProbeLog, ProbeRecord, Word};
pub use engine::{BackendKind, EngineStats, OfflineCounter, StreamEngine};
pub use error::{Error, Result};
pub use strings::{Alphabet, CountArray, Symbol, SymbolString};
