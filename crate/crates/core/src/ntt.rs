//! Exact integer cross-correlation over the prime field `Z/998244353`.
//!
//! Every correlation computed here counts coincidences between two 0/1
//! sequences, so the true value never exceeds the shorter input length. As
//! long as that length is below the modulus the residue *is* the integer.

use alloc::vec;
use alloc::vec::Vec;

const MODULUS: u64 = 998_244_353;
const GENERATOR: u64 = 3;
/// `MODULUS - 1 = 119 * 2^23`, so transforms up to `2^23` points exist.
const MAX_LOG_LEN: u32 = 23;

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= MODULUS;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % MODULUS;
        }
        base = base * base % MODULUS;
        exp >>= 1;
    }
    acc
}

fn transform(values: &mut [u64], inverse: bool) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());

    let mut j = 0usize;
    for i in 1..len {
        let mut bit = len >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            values.swap(i, j);
        }
    }

    let mut half = 1usize;
    while half < len {
        let step = (MODULUS - 1) / (2 * half as u64);
        let mut root = pow_mod(GENERATOR, step);
        if inverse {
            root = pow_mod(root, MODULUS - 2);
        }
        for start in (0..len).step_by(2 * half) {
            let mut w = 1u64;
            for k in 0..half {
                let a = values[start + k];
                let b = values[start + k + half] * w % MODULUS;
                values[start + k] = if a + b >= MODULUS { a + b - MODULUS } else { a + b };
                values[start + k + half] = if a >= b { a - b } else { a + MODULUS - b };
                w = w * root % MODULUS;
            }
        }
        half <<= 1;
    }

    if inverse {
        let inv_len = pow_mod(len as u64, MODULUS - 2);
        for v in values.iter_mut() {
            *v = *v * inv_len % MODULUS;
        }
    }
}

/// Forward transform of a text indicator, reusable across many patterns.
pub(crate) struct TextSpectrum {
    len: usize,
    text_len: usize,
    values: Vec<u64>,
}

impl TextSpectrum {
    pub(crate) fn new(text: &[bool], pattern_len: usize) -> Self {
        let len = (text.len() + pattern_len).next_power_of_two().max(1);
        assert!(len.trailing_zeros() <= MAX_LOG_LEN, "transform length {len} too large");
        let mut values = vec![0u64; len];
        for (slot, &bit) in values.iter_mut().zip(text) {
            *slot = u64::from(bit);
        }
        transform(&mut values, false);
        TextSpectrum { len, text_len: text.len(), values }
    }

    /// `out[k] = sum_q pattern[q] * text[k + q]` for every alignment `k`.
    pub(crate) fn correlate(&self, pattern: &[bool]) -> Vec<u32> {
        let m = pattern.len();
        assert!(m >= 1 && m <= self.text_len);
        assert!((m as u64) < MODULUS);
        let mut rev = vec![0u64; self.len];
        for (q, &bit) in pattern.iter().enumerate() {
            rev[m - 1 - q] = u64::from(bit);
        }
        transform(&mut rev, false);
        for (a, b) in rev.iter_mut().zip(&self.values) {
            *a = *a * b % MODULUS;
        }
        transform(&mut rev, true);
        let alignments = self.text_len - m + 1;
        rev[m - 1..m - 1 + alignments].iter().map(|&v| v as u32).collect()
    }
}
