//! Alphabets, symbol strings and exact per-alignment mismatch counting.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{invalid, Error, Result};
use crate::ntt::TextSpectrum;

pub type Symbol = u32;

/// Symbols are `delta`-bit unsigned integers, so the alphabet is `[0, 2^delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    delta: u32,
}

impl Alphabet {
    pub const MAX_DELTA: u32 = 31;

    pub fn new(delta: u32) -> Result<Self> {
        if delta == 0 || delta > Self::MAX_DELTA {
            return Err(invalid!("symbol width must be in 1..={}, got {delta}", Self::MAX_DELTA));
        }
        Ok(Alphabet { delta })
    }

    /// Smallest alphabet holding `count` distinct symbols.
    pub fn with_capacity(count: u64) -> Result<Self> {
        let delta = bits_for(count.saturating_sub(1)).max(1);
        Self::new(delta)
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn size(&self) -> u64 {
        1u64 << self.delta
    }

    /// The largest symbol, `2^delta - 1`.
    pub fn max_symbol(&self) -> Symbol {
        (self.size() - 1) as Symbol
    }

    pub fn contains(&self, symbol: Symbol) -> bool {
        u64::from(symbol) < self.size()
    }

    pub fn check(&self, symbol: Symbol) -> Result<()> {
        if self.contains(symbol) {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange { symbol, size: self.size() })
        }
    }
}

/// Number of bits needed to write `value` in binary (0 for 0).
pub fn bits_for(value: u64) -> u32 {
    u64::BITS - value.leading_zeros()
}

/// A finite sequence of symbols over a fixed alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolString {
    alphabet: Alphabet,
    symbols: Vec<Symbol>,
}

impl SymbolString {
    pub fn new(alphabet: Alphabet, symbols: Vec<Symbol>) -> Result<Self> {
        for &s in &symbols {
            alphabet.check(s)?;
        }
        Ok(SymbolString { alphabet, symbols })
    }

    pub fn filled(alphabet: Alphabet, symbol: Symbol, len: usize) -> Result<Self> {
        alphabet.check(symbol)?;
        Ok(SymbolString { alphabet, symbols: vec![symbol; len] })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.symbols
    }

    /// `S[start, start + len - 1]` as a new string.
    pub fn substring(&self, start: usize, len: usize) -> Result<Self> {
        let end = start.checked_add(len).filter(|&e| e <= self.len());
        let end = end.ok_or_else(|| invalid!("substring [{start}, +{len}) exceeds length {}", self.len()))?;
        Ok(SymbolString { alphabet: self.alphabet, symbols: self.symbols[start..end].to_vec() })
    }

    pub fn set(&mut self, index: usize, symbol: Symbol) -> Result<()> {
        self.alphabet.check(symbol)?;
        let len = self.len();
        let slot = self.symbols.get_mut(index).ok_or_else(|| invalid!("index {index} out of range {len}"))?;
        *slot = symbol;
        Ok(())
    }
}

impl Deref for SymbolString {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.symbols
    }
}

/// One non-negative count per alignment (or per arrival).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountArray(Vec<u32>);

impl CountArray {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for CountArray {
    fn from(v: Vec<u32>) -> Self {
        CountArray(v)
    }
}

impl Deref for CountArray {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl FromIterator<u32> for CountArray {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        CountArray(iter.into_iter().collect())
    }
}

fn same_alphabet(a: &SymbolString, b: &SymbolString) -> Result<()> {
    if a.alphabet != b.alphabet {
        return Err(Error::AlphabetMismatch { left: a.alphabet.delta, right: b.alphabet.delta });
    }
    Ok(())
}

fn check_window(pattern: &SymbolString, text: &SymbolString) -> Result<()> {
    same_alphabet(pattern, text)?;
    if text.len() < pattern.len() {
        return Err(Error::LengthMismatch { left: pattern.len(), right: text.len() });
    }
    Ok(())
}

pub fn hamming_distance(a: &SymbolString, b: &SymbolString) -> Result<u32> {
    same_alphabet(a, b)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(a.iter().zip(b.iter()).filter(|(x, y)| x != y).count() as u32)
}

/// Hamming distances between `s1` (length `m`) and every length-`m` window of
/// `s2` (length `2m`); `m + 1` entries.
pub fn ham_array(s1: &SymbolString, s2: &SymbolString) -> Result<CountArray> {
    same_alphabet(s1, s2)?;
    if s2.len() != 2 * s1.len() {
        return Err(invalid!("ham_array needs |s2| = 2|s1|, got {} and {}", s1.len(), s2.len()));
    }
    Ok(mismatch_counts_fast(s1, s2).into())
}

pub fn sliding_mismatch_counts(pattern: &SymbolString, text: &SymbolString) -> Result<CountArray> {
    check_window(pattern, text)?;
    Ok(mismatch_counts_naive(pattern, text).into())
}

pub fn sliding_mismatch_counts_fast(pattern: &SymbolString, text: &SymbolString) -> Result<CountArray> {
    check_window(pattern, text)?;
    Ok(mismatch_counts_fast(pattern, text).into())
}

pub fn match_count_array(pattern: &SymbolString, text: &SymbolString) -> Result<CountArray> {
    check_window(pattern, text)?;
    let m = pattern.len() as u32;
    Ok(mismatch_counts_fast(pattern, text).into_iter().map(|c| m - c).collect())
}

/// Window-by-window mismatch counts. Panics if `text` is shorter than `pattern`.
pub fn mismatch_counts_naive(pattern: &[Symbol], text: &[Symbol]) -> Vec<u32> {
    assert!(text.len() >= pattern.len());
    (0..=text.len() - pattern.len())
        .map(|k| pattern.iter().zip(&text[k..]).filter(|(p, t)| p != t).count() as u32)
        .collect()
}

/// Frequent/rare split: a symbol occurring at least `ceil(sqrt(|pattern|))`
/// times in the pattern is counted with one exact cross-correlation, every
/// other symbol by walking its occurrence list. Output equals
/// [`mismatch_counts_naive`]. Panics if `text` is shorter than `pattern`.
pub fn mismatch_counts_fast(pattern: &[Symbol], text: &[Symbol]) -> Vec<u32> {
    assert!(text.len() >= pattern.len());
    let m = pattern.len();
    let alignments = text.len() - m + 1;
    if m == 0 {
        return vec![0; alignments];
    }

    let mut occurrences: BTreeMap<Symbol, Vec<usize>> = BTreeMap::new();
    for (q, &s) in pattern.iter().enumerate() {
        occurrences.entry(s).or_default().push(q);
    }
    let threshold = (m as u64).isqrt() + u64::from((m as u64).isqrt().pow(2) != m as u64);
    let threshold = threshold as usize;

    let mut matches = vec![0u32; alignments];
    let mut rare: BTreeMap<Symbol, &[usize]> = BTreeMap::new();
    for (&symbol, positions) in &occurrences {
        if positions.len() >= threshold && m > 1 {
            let in_pattern: Vec<bool> = pattern.iter().map(|&s| s == symbol).collect();
            let in_text: Vec<bool> = text.iter().map(|&s| s == symbol).collect();
            let corr = TextSpectrum::new(&in_text, m).correlate(&in_pattern);
            for (acc, c) in matches.iter_mut().zip(corr) {
                *acc += c;
            }
        } else {
            rare.insert(symbol, positions);
        }
    }

    if !rare.is_empty() {
        for (k, s) in text.iter().enumerate() {
            if let Some(positions) = rare.get(s) {
                for &q in positions.iter() {
                    if q <= k && k - q < alignments {
                        matches[k - q] += 1;
                    }
                }
            }
        }
    }

    matches.into_iter().map(|c| m as u32 - c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(delta: u32, v: &[u32]) -> SymbolString {
        SymbolString::new(Alphabet::new(delta).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::new(32).is_err());
        let a = Alphabet::new(3).unwrap();
        assert_eq!(a.size(), 8);
        assert_eq!(a.max_symbol(), 7);
        assert!(SymbolString::new(a, vec![7, 8]).is_err());
        assert_eq!(Alphabet::with_capacity(5).unwrap().delta(), 3);
        assert_eq!(Alphabet::with_capacity(4).unwrap().delta(), 2);
        assert_eq!(Alphabet::with_capacity(1).unwrap().delta(), 1);
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&s(2, &[1, 2, 3]), &s(2, &[1, 2, 3])).unwrap(), 0);
        assert_eq!(hamming_distance(&s(2, &[0, 1, 2, 3]), &s(2, &[0, 2, 2, 0])).unwrap(), 2);
        assert!(matches!(hamming_distance(&s(2, &[0, 1]), &s(2, &[0])), Err(Error::LengthMismatch { .. })));
        assert!(matches!(hamming_distance(&s(2, &[0]), &s(3, &[0])), Err(Error::AlphabetMismatch { .. })));
    }

    #[test]
    fn ham_array_examples() {
        assert_eq!(ham_array(&s(3, &[5]), &s(3, &[5, 7])).unwrap().as_slice(), &[0, 1]);
        assert_eq!(ham_array(&s(2, &[1, 2]), &s(2, &[1, 2, 1, 2])).unwrap().as_slice(), &[0, 2, 0]);
        assert!(ham_array(&s(2, &[1, 2]), &s(2, &[1, 2, 1])).is_err());
    }

    #[test]
    fn sliding_examples() {
        let p = s(4, &[9, 1, 3]);
        assert_eq!(sliding_mismatch_counts(&p, &p).unwrap().as_slice(), &[0]);
        let nine = s(4, &[9]);
        assert_eq!(sliding_mismatch_counts(&nine, &s(4, &[9, 9, 9])).unwrap().as_slice(), &[0, 0, 0]);
        assert!(sliding_mismatch_counts(&s(4, &[1, 2]), &s(4, &[1])).is_err());
        assert!(sliding_mismatch_counts_fast(&s(4, &[1, 2]), &s(4, &[1])).is_err());
    }

    #[test]
    fn single_symbol_alphabet_is_all_zero() {
        let p = s(1, &[0; 40]);
        let t = s(1, &[0; 100]);
        assert!(sliding_mismatch_counts_fast(&p, &t).unwrap().iter().all(|&c| c == 0));
    }

    #[test]
    fn unique_symbols_take_rare_path() {
        let p: Vec<u32> = (0..50).collect();
        let t: Vec<u32> = (0..300).map(|i| (i * 37 + 11) % 64).collect();
        assert_eq!(mismatch_counts_fast(&p, &t), mismatch_counts_naive(&p, &t));
    }

    #[test]
    fn match_counts() {
        let p = s(3, &[1, 2, 3]);
        assert_eq!(match_count_array(&p, &p).unwrap().as_slice(), &[3]);
    }

    #[test]
    fn empty_pattern() {
        assert_eq!(mismatch_counts_fast(&[], &[1, 2]), vec![0, 0, 0]);
        assert_eq!(mismatch_counts_naive(&[], &[1, 2]), vec![0, 0, 0]);
    }
}
