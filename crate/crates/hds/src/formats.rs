//! On-disk formats.
//!
//! * `HDS1` symbol strings: text, one `HDS1` line, `delta=<k>`, `len=<n>`,
//!   then `n` whitespace-separated decimal symbols.
//! * `HPL1` probe logs: binary, little-endian. Magic `HPL1`, then `w`, `n`
//!   and the record count as `u64`, then per record `t: u64`, `kind: u8`
//!   (0 read, 1 write), `addr: u64`, `value: u64`.
//! * Matrices: a JSON array of rows of 0/1 integers.
//! * Dictionaries and ground truth: JSON objects carrying `format_version`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use hds_core::hard::BlockDictionary;
use hds_core::matmul::BinaryMatrix;
use hds_core::{Alphabet, ProbeKind, ProbeLog, ProbeRecord, SymbolString};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

const HPL_MAGIC: &[u8; 4] = b"HPL1";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Core(#[from] hds_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

fn malformed(msg: impl Into<String>) -> FormatError {
    FormatError::Malformed(msg.into())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn format_symbol_string(s: &SymbolString) -> String {
    let mut out = format!("HDS1\ndelta={}\nlen={}\n", s.alphabet().delta(), s.len());
    for line in s.chunks(32) {
        let words: Vec<String> = line.iter().map(u32::to_string).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_symbol_string(text: &str) -> Result<SymbolString> {
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some("HDS1") {
        return Err(malformed("missing HDS1 header"));
    }
    let mut field = |name: &str| -> Result<u64> {
        let token = tokens.next().ok_or_else(|| malformed(format!("missing {name}=")))?;
        token
            .strip_prefix(name)
            .and_then(|v| v.strip_prefix('='))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| malformed(format!("expected {name}=<integer>, got {token:?}")))
    };
    let delta = field("delta")?;
    let len = field("len")? as usize;
    let symbols = tokens
        .map(|t| t.parse::<u32>().map_err(|_| malformed(format!("bad symbol {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if symbols.len() != len {
        return Err(malformed(format!("len={len} but {} symbols follow", symbols.len())));
    }
    let delta = u32::try_from(delta).map_err(|_| malformed("delta out of range"))?;
    Ok(SymbolString::new(Alphabet::new(delta)?, symbols)?)
}

pub fn load_symbol_string(path: &Path) -> Result<SymbolString> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| malformed(format!("{} is not UTF-8", path.display())))?;
    parse_symbol_string(text)
}

pub fn save_symbol_string(path: &Path, s: &SymbolString) -> Result<()> {
    write_file(path, format_symbol_string(s).as_bytes())
}

pub fn write_probe_log<W: Write>(out: &mut W, log: &ProbeLog) -> io::Result<()> {
    out.write_all(HPL_MAGIC)?;
    out.write_all(&u64::from(log.w).to_le_bytes())?;
    out.write_all(&log.n.to_le_bytes())?;
    out.write_all(&(log.records.len() as u64).to_le_bytes())?;
    for r in &log.records {
        out.write_all(&r.t.to_le_bytes())?;
        out.write_all(&[match r.kind {
            ProbeKind::Read => 0,
            ProbeKind::Write => 1,
        }])?;
        out.write_all(&r.addr.to_le_bytes())?;
        out.write_all(&r.value.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_probe_log<R: Read>(input: &mut R) -> Result<ProbeLog> {
    let truncated = |_| malformed("truncated HPL1 log");
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(truncated)?;
    if &magic != HPL_MAGIC {
        return Err(malformed("missing HPL1 header"));
    }
    let mut word = || -> Result<u64> {
        let mut b = [0u8; 8];
        input.read_exact(&mut b).map_err(truncated)?;
        Ok(u64::from_le_bytes(b))
    };
    let w = u32::try_from(word()?).ok().filter(|w| (1..=64).contains(w)).ok_or_else(|| malformed("bad word size"))?;
    let n = word()?;
    let count = word()?;
    let mut records = Vec::new();
    for _ in 0..count {
        let mut b = [0u8; 25];
        input.read_exact(&mut b).map_err(truncated)?;
        let field = |k: usize| u64::from_le_bytes(b[k..k + 8].try_into().expect("8 bytes"));
        let kind = match b[8] {
            0 => ProbeKind::Read,
            1 => ProbeKind::Write,
            other => return Err(malformed(format!("bad probe kind {other}"))),
        };
        records.push(ProbeRecord { t: field(0), kind, addr: field(9), value: field(17) });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest).map_err(|e| malformed(e.to_string()))? != 0 {
        return Err(malformed("trailing bytes after HPL1 records"));
    }
    Ok(ProbeLog { w, n, records })
}

pub fn parse_matrix(text: &str) -> Result<BinaryMatrix> {
    let rows: Vec<Vec<u8>> = serde_json::from_str(text)?;
    Ok(BinaryMatrix::from_rows(&rows)?)
}

pub fn load_matrix(path: &Path) -> Result<BinaryMatrix> {
    let bytes = read_file(path)?;
    parse_matrix(std::str::from_utf8(&bytes).map_err(|_| malformed("matrix file is not UTF-8"))?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryFile {
    pub format_version: u32,
    pub mu: usize,
    pub complete: bool,
    pub r: Vec<u32>,
    pub blocks: Vec<Vec<u32>>,
    /// Hamming array of each block against `r`.
    pub keys: Vec<Vec<u32>>,
}

impl DictionaryFile {
    pub fn new(mu: usize, dict: &BlockDictionary) -> Self {
        DictionaryFile {
            format_version: FORMAT_VERSION,
            mu,
            complete: dict.complete(),
            r: dict.r_string().to_vec(),
            blocks: dict.blocks().iter().map(|b| b.to_vec()).collect(),
            keys: dict.keys().iter().map(|k| k.to_vec()).collect(),
        }
    }
}

/// Where the dictionary blocks sit in the generated update string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub format_version: u32,
    pub mu: usize,
    pub n: usize,
    pub seed: u64,
    pub t0: usize,
    pub t1: usize,
    pub t2: usize,
    pub block_len: usize,
    pub first_block: usize,
    /// Dictionary index of each block, in stream order.
    pub blocks: Vec<usize>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_string_round_trip() {
        let s = SymbolString::new(Alphabet::new(3).unwrap(), (0..100).map(|i| i % 8).collect()).unwrap();
        assert_eq!(parse_symbol_string(&format_symbol_string(&s)).unwrap(), s);
        let empty = SymbolString::new(Alphabet::new(1).unwrap(), vec![]).unwrap();
        assert_eq!(parse_symbol_string(&format_symbol_string(&empty)).unwrap(), empty);
    }

    #[test]
    fn symbol_string_rejects() {
        for bad in [
            "",
            "HDS2\ndelta=2\nlen=0\n",
            "HDS1\ndelta=2\nlen=2\n1\n",
            "HDS1\ndelta=2\nlen=1\n4\n",
            "HDS1\nlen=1\ndelta=2\n1",
        ] {
            assert!(parse_symbol_string(bad).is_err(), "{bad:?}");
        }
        assert!(parse_symbol_string("HDS1 delta=2 len=3 0 1 3").is_ok());
    }

    #[test]
    fn probe_log_round_trip() {
        let log = ProbeLog {
            w: 12,
            n: 9,
            records: vec![
                ProbeRecord { t: 0, kind: ProbeKind::Write, addr: 3, value: 4095 },
                ProbeRecord { t: 8, kind: ProbeKind::Read, addr: 0, value: 0 },
            ],
        };
        let mut bytes = Vec::new();
        write_probe_log(&mut bytes, &log).unwrap();
        assert_eq!(bytes.len(), 4 + 24 + 2 * 25);
        assert_eq!(read_probe_log(&mut bytes.as_slice()).unwrap(), log);
        assert!(read_probe_log(&mut &bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(read_probe_log(&mut bytes.as_slice()).is_err());
    }

    #[test]
    fn matrices() {
        let m = parse_matrix("[[0,1],[1,1]]").unwrap();
        assert_eq!(m.to_rows(), vec![vec![0, 1], vec![1, 1]]);
        assert!(parse_matrix("[[0,2]]").is_err());
        assert!(parse_matrix("[[0,1],[1]]").is_err());
        assert!(parse_matrix("{}").is_err());
    }
}
