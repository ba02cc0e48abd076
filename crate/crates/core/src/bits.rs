//! Oriented binary strings.
//!
//! Bits are stored one per byte (`0` or `1`). Every string in this crate is
//! at most a few million bits long, so the byte-per-bit layout keeps window
//! extraction and slicing trivial without measurable cost.

use std::fmt;
use std::ops::{Index, Range};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid bit character {0:?} at offset {1}")]
    InvalidChar(char, usize),
}

/// An oriented sequence of bits, most significant (leftmost) first.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// Builds a string from raw bit values. Any nonzero byte counts as `1`.
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Self {
        Self(bits.into_iter().map(|b| (b != 0) as u8).collect())
    }

    /// The `width` low bits of `value`, most significant first.
    pub fn from_u128(value: u128, width: usize) -> Self {
        debug_assert!(width <= 128);
        Self((0..width).rev().map(|i| ((value >> i) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn push(&mut self, bit: u8) {
        self.0.push((bit != 0) as u8);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn extend_from_slice(&mut self, bits: &[u8]) {
        self.0.extend(bits.iter().map(|&b| (b != 0) as u8));
    }

    pub fn slice(&self, range: Range<usize>) -> BitString {
        BitString(self.0[range].to_vec())
    }

    pub fn concat(parts: &[&BitString]) -> BitString {
        let mut out = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            out.extend_from_slice(&p.0);
        }
        BitString(out)
    }

    /// Reads `width` bits starting at `pos` as an unsigned integer.
    pub fn read_u128(&self, pos: usize, width: usize) -> u128 {
        bits_to_u128(&self.0[pos..pos + width])
    }

    pub fn to_u128(&self) -> u128 {
        bits_to_u128(&self.0)
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

pub(crate) fn bits_to_u128(bits: &[u8]) -> u128 {
    debug_assert!(bits.len() <= 128);
    bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128)
}

impl Index<usize> for BitString {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(BitsError::InvalidChar(other, i)),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl From<Vec<u8>> for BitString {
    fn from(bits: Vec<u8>) -> Self {
        BitString::from_bits(bits)
    }
}
