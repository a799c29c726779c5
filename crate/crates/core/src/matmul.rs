//! Binary matrix multiplication through sliding match counts.
//!
//! `A` (`m x l`) becomes the pattern: each row with `x` for 0 and the
//! 1-based column number for 1, rows concatenated. `B` (`l x nb`) becomes the
//! text: each column with `y` for 0 and the 1-based row number for 1, a `$`
//! after every column, and `(m - 1) l` further `$` on each side. Row `i` of the
//! pattern lines up with column `j` of the text at offset
//! `(m - 1) l + j (l + 1) - i l`, and the match count there is `(AB)[i][j]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::strings::{match_count_array, Alphabet, CountArray, Symbol, SymbolString};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid!("matrix must be non-empty, got {rows}x{cols}"));
        }
        if data.len() != rows * cols {
            return Err(invalid!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len()));
        }
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(invalid!("matrix entry {bad} is not binary"));
        }
        Ok(BinaryMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid!("rows have different lengths"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.data.chunks(self.cols).map(<[u8]>::to_vec).collect()
    }
}

/// Reserved symbols and offsets of one reduction. Index symbols are `1..=l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionLayout {
    /// Inner dimension `l`.
    pub inner: usize,
    pub pattern_rows: usize,
    pub text_cols: usize,
    pub x: Symbol,
    pub y: Symbol,
    pub dollar: Symbol,
    pub head_pad: usize,
    pub tail_pad: usize,
}

impl ReductionLayout {
    fn new(inner: usize, pattern_rows: usize, text_cols: usize) -> Self {
        let l = inner as Symbol;
        let pad = (pattern_rows - 1) * inner;
        ReductionLayout {
            inner,
            pattern_rows,
            text_cols,
            x: l + 1,
            y: l + 2,
            dollar: l + 3,
            head_pad: pad,
            tail_pad: pad,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::with_capacity(self.inner as u64 + 4).expect("inner dimension is small")
    }

    /// Alignment at which pattern row `i` sits on text column `j` (0-based).
    pub fn offset(&self, i: usize, j: usize) -> usize {
        self.head_pad + j * (self.inner + 1) - i * self.inner
    }

    pub fn text_len(&self) -> usize {
        self.head_pad + self.text_cols * (self.inner + 1) + self.tail_pad
    }

    pub fn pattern_len(&self) -> usize {
        self.pattern_rows * self.inner
    }
}

pub fn encode_pattern(a: &BinaryMatrix) -> SymbolString {
    let layout = ReductionLayout::new(a.cols, a.rows, 1);
    let symbols = (0..a.rows)
        .flat_map(|i| (0..a.cols).map(move |k| (i, k)))
        .map(|(i, k)| if a.get(i, k) == 1 { k as Symbol + 1 } else { layout.x })
        .collect();
    SymbolString::new(layout.alphabet(), symbols).expect("symbols fit by construction")
}

/// Text for `b`, padded for a pattern of `pattern_rows` rows.
pub fn encode_text(b: &BinaryMatrix, pattern_rows: usize) -> Result<(SymbolString, ReductionLayout)> {
    if pattern_rows == 0 {
        return Err(invalid!("pattern must have at least one row"));
    }
    let layout = ReductionLayout::new(b.rows, pattern_rows, b.cols);
    let mut symbols = vec![layout.dollar; layout.head_pad];
    for j in 0..b.cols {
        symbols.extend((0..b.rows).map(|k| if b.get(k, j) == 1 { k as Symbol + 1 } else { layout.y }));
        symbols.push(layout.dollar);
    }
    symbols.extend(core::iter::repeat_n(layout.dollar, layout.tail_pad));
    Ok((SymbolString::new(layout.alphabet(), symbols)?, layout))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatmulResult {
    pub product: Vec<Vec<u32>>,
    pub match_counts: CountArray,
    pub layout: ReductionLayout,
}

/// `A B` read off the match counts of the encoded pattern against the encoded
/// text. Rejected when two `(i, j)` pairs would share an offset, which
/// happens exactly when `m >= l + 2` and `nb >= l + 1`.
pub fn multiply_via_matching(a: &BinaryMatrix, b: &BinaryMatrix) -> Result<MatmulResult> {
    let (m, l, nb) = (a.rows, a.cols, b.cols);
    if b.rows != l {
        return Err(invalid!("inner dimensions differ: {m}x{l} times {}x{nb}", b.rows));
    }
    if m >= l + 2 && nb > l {
        return Err(invalid!(
            "a {m}x{l} by {l}x{nb} product has colliding alignments: (j - j')(l + 1) = (i - i')l has solutions once m >= l + 2 and nb >= l + 1"
        ));
    }
    let pattern = encode_pattern(a);
    let (text, layout) = encode_text(b, m)?;
    let match_counts = match_count_array(&pattern, &text)?;
    let product = (0..m).map(|i| (0..nb).map(|j| match_counts[layout.offset(i, j)]).collect()).collect();
    Ok(MatmulResult { product, match_counts, layout })
}
