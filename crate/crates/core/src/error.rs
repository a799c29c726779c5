use alloc::string::String;

/// Errors raised by every fallible operation in this crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("symbol {symbol} is outside an alphabet of {size} symbols")]
    SymbolOutOfRange { symbol: u32, size: u64 },

    #[error("alphabets differ ({left} vs {right} bits per symbol)")]
    AlphabetMismatch { left: u32, right: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule round {round} writes position {position}, which is already occupied")]
    OccupiedPosition { round: usize, position: usize },

    #[error("replay read cell {addr} at arrival {t}: it was written inside the skipped interval but is missing from the encoding")]
    Integrity { t: u64, addr: u64 },

    #[error("malformed encoding: {0}")]
    Encoding(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidParameter(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
