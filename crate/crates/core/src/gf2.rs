//! Bit-packed binary vectors and the little GF(2) arithmetic the codes need.
//!
//! Bit `t` of a vector lives in bit `t % 64` of word `t / 64`, least
//! significant first. Serialized as bytes this is bit `t % 8` of byte `t / 8`,
//! which is the convention used by the hex encoding. Padding bits above `len`
//! are kept at zero so that derived equality is bitwise equality.

use std::fmt;

use crate::error::{check_len, Error, Result};

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A packed row vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = BitVec {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.clear_padding();
        v
    }

    /// Builds a vector from the low `len` bits of `value` (bit 0 first).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD_BITS, "from_u64 supports at most 64 bits");
        let mut v = BitVec::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.clear_padding();
        }
        v
    }

    /// Parses a string of `0`/`1` characters; the first character is bit 0.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let mut v = BitVec::zeros(s.len());
        for (t, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(t, true),
                other => {
                    return Err(Error::Parameter(format!(
                        "invalid bit character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(v)
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = BitVec::zeros(0);
        for b in bits {
            v.push(b);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, t: usize) -> bool {
        assert!(
            t < self.len,
            "bit index {t} out of range for length {}",
            self.len
        );
        (self.words[t / WORD_BITS] >> (t % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, t: usize, bit: bool) {
        assert!(
            t < self.len,
            "bit index {t} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (t % WORD_BITS);
        if bit {
            self.words[t / WORD_BITS] |= mask;
        } else {
            self.words[t / WORD_BITS] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |t| self.get(t))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Interprets the vector as an unsigned integer, bit 0 least significant.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD_BITS, "to_u64 supports at most 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitVec) -> Result<()> {
        check_len("xor", self.len, other.len)?;
        self.xor_words(&other.words);
        Ok(())
    }

    /// XOR without the length check; both sides must already agree.
    pub(crate) fn xor_words(&mut self, other: &[u64]) {
        debug_assert_eq!(self.words.len(), other.len());
        for (a, b) in self.words.iter_mut().zip(other) {
            *a ^= *b;
        }
    }

    pub fn hamming_distance(&self, other: &BitVec) -> Result<usize> {
        check_len("hamming_distance", self.len, other.len)?;
        Ok(distance_words(&self.words, &other.words))
    }

    /// Concatenates `parts` in order.
    pub fn concat(parts: &[BitVec]) -> BitVec {
        let mut out = BitVec::zeros(0);
        for p in parts {
            for b in p.iter() {
                out.push(b);
            }
        }
        out
    }

    /// Splits into consecutive chunks of `chunk` bits. `len` must be a multiple of `chunk`.
    pub fn split(&self, chunk: usize) -> Result<Vec<BitVec>> {
        if chunk == 0 || !self.len.is_multiple_of(chunk) {
            return Err(Error::Parameter(format!(
                "cannot split a {}-bit vector into {chunk}-bit chunks",
                self.len
            )));
        }
        Ok((0..self.len / chunk)
            .map(|c| BitVec::from_bools((0..chunk).map(|t| self.get(c * chunk + t))))
            .collect())
    }

    /// Packed payload as bytes, bit `t` in bit `t % 8` of byte `t / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.truncate(self.len.div_ceil(8));
        bytes
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<BitVec> {
        check_len("from_bytes", len.div_ceil(8), bytes.len())?;
        let mut v = BitVec::zeros(len);
        for (i, &b) in bytes.iter().enumerate() {
            v.words[i / 8] |= u64::from(b) << (8 * (i % 8));
        }
        let mut canonical = v.clone();
        canonical.clear_padding();
        if canonical != v {
            return Err(Error::Hex("nonzero padding bits".into()));
        }
        Ok(v)
    }

    /// Lowercase hex of the packed bytes; the length travels separately.
    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<BitVec> {
        if !hex.len().is_multiple_of(2) || !hex.is_ascii() {
            return Err(Error::Hex(hex.to_string()));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| Error::Hex(hex.to_string()))
            })
            .collect::<Result<Vec<u8>>>()?;
        BitVec::from_bytes(&bytes, len)
    }

    fn clear_padding(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn padding_is_clear(&self) -> bool {
        let mut c = self.clone();
        c.clear_padding();
        c.words == self.words && self.words.len() == words_for(self.len)
    }
}

pub(crate) fn distance_words(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// A `rows × cols` matrix over GF(2), stored as packed rows.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVec>) -> Result<Self> {
        for r in &rows {
            check_len("BitMatrix::from_rows", cols, r.len())?;
        }
        Ok(BitMatrix { cols, rows })
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &BitVec {
        &self.rows[j]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &BitVec> {
        self.rows.iter()
    }

    /// `w ⊙ G`: the XOR of the rows selected by the set bits of `w`.
    pub fn left_mul(&self, w: &BitVec) -> Result<BitVec> {
        check_len("vec_mat_mul", self.rows(), w.len())?;
        let mut out = BitVec::zeros(self.cols);
        for (j, row) in self.rows.iter().enumerate() {
            if w.get(j) {
                out.xor_words(row.words());
            }
        }
        Ok(out)
    }
}

pub fn xor(a: &BitVec, b: &BitVec) -> Result<BitVec> {
    a.xor(b)
}

pub fn vec_mat_mul(w: &BitVec, g: &BitMatrix) -> Result<BitVec> {
    g.left_mul(w)
}

pub fn hamming_distance(a: &BitVec, b: &BitVec) -> Result<usize> {
    a.hamming_distance(b)
}
