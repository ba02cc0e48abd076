//! An indexed mutually uncorrelated (MU) code.
//!
//! Codewords of length `L` have the shape `0^k 1 ∘ x ∘ 1`, where
//! `k = ceil(log2 L) + 1` and the middle section `x` (length `L - k - 2`)
//! contains no run of `k` zeros. No proper prefix of a codeword equals a
//! proper suffix of any codeword, so occurrences inside a string never
//! overlap. Codewords are indexed by the lexicographic rank of `x`, counted
//! with a run-length dynamic program.

use thiserror::Error;

use crate::bits::BitString;

/// Shortest supported codeword length.
pub const MIN_LEN: usize = 8;
/// Longest supported codeword length (codewords are held in a `u64`).
pub const MAX_LEN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MuError {
    #[error("codeword length {0} outside the supported range [{MIN_LEN}, {MAX_LEN}]")]
    BadLength(usize),
    #[error("index {index} out of range for a code of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("word has length {got}, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("word is not a codeword")]
    NotACodeword,
    #[error("{requested} markers requested but the code only has {size} codewords")]
    TooManyMarkers { requested: u64, size: u64 },
}

/// Number of codewords of the length-`len` code.
pub fn mu_size(len: usize) -> Result<u64, MuError> {
    Ok(MuCode::new(len)?.size())
}

/// A mutually uncorrelated code of fixed length, with rank/unrank.
#[derive(Debug, Clone)]
pub struct MuCode {
    len: usize,
    zero_prefix: usize,
    middle_len: usize,
    /// `completions[r][z]`: valid middle suffixes of length `r` after a
    /// trailing run of `z` zeros.
    completions: Vec<Vec<u64>>,
}

impl MuCode {
    pub fn new(len: usize) -> Result<Self, MuError> {
        if !(MIN_LEN..=MAX_LEN).contains(&len) {
            return Err(MuError::BadLength(len));
        }
        let zero_prefix = (len as u64 - 1).ilog2() as usize + 2;
        let middle_len = len - zero_prefix - 2;
        let mut completions = vec![vec![0u64; zero_prefix]; middle_len + 1];
        completions[0].iter_mut().for_each(|c| *c = 1);
        for r in 1..=middle_len {
            for z in 0..zero_prefix {
                let with_zero = if z + 1 < zero_prefix {
                    completions[r - 1][z + 1]
                } else {
                    0
                };
                completions[r][z] = with_zero + completions[r - 1][0];
            }
        }
        Ok(Self {
            len,
            zero_prefix,
            middle_len,
            completions,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: every code has `L >= MIN_LEN` bits.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Length of the all-zero prefix, `ceil(log2 L) + 1`.
    pub fn zero_prefix(&self) -> usize {
        self.zero_prefix
    }

    pub fn size(&self) -> u64 {
        // The bit preceding the middle section is the `1` after the zero prefix.
        self.completions[self.middle_len][0]
    }

    /// Codeword `index` as an `L`-bit integer (first bit most significant).
    pub fn unrank_word(&self, index: u64) -> Result<u64, MuError> {
        if index >= self.size() {
            return Err(MuError::IndexOutOfRange {
                index,
                size: self.size(),
            });
        }
        let mut rest = index;
        let mut run = 0usize;
        let mut middle = 0u64;
        for r in (0..self.middle_len).rev() {
            let zeros_first = if run + 1 < self.zero_prefix {
                self.completions[r][run + 1]
            } else {
                0
            };
            middle <<= 1;
            if rest < zeros_first {
                run += 1;
            } else {
                rest -= zeros_first;
                middle |= 1;
                run = 0;
            }
        }
        Ok(self.assemble(middle))
    }

    pub fn unrank(&self, index: u64) -> Result<BitString, MuError> {
        Ok(BitString::from_u128(self.unrank_word(index)? as u128, self.len))
    }

    /// Rank of an `L`-bit word, or `None` if it is not a codeword.
    pub fn rank_word(&self, word: u64) -> Option<u64> {
        let middle = self.middle_of(word)?;
        let mut rank = 0u64;
        let mut run = 0usize;
        for r in (0..self.middle_len).rev() {
            let bit = (middle >> r) & 1;
            if bit == 0 {
                run += 1;
                if run >= self.zero_prefix {
                    return None;
                }
            } else {
                if run + 1 < self.zero_prefix {
                    rank += self.completions[r][run + 1];
                }
                run = 0;
            }
        }
        Some(rank)
    }

    pub fn rank(&self, word: &BitString) -> Result<u64, MuError> {
        self.check_len(word)?;
        self.rank_word(word.to_u128() as u64)
            .ok_or(MuError::NotACodeword)
    }

    pub fn is_codeword_word(&self, word: u64) -> bool {
        self.rank_word(word).is_some()
    }

    pub fn is_codeword(&self, word: &BitString) -> Result<bool, MuError> {
        self.check_len(word)?;
        Ok(self.is_codeword_word(word.to_u128() as u64))
    }

    /// The `t + 1` reserved markers `m_0..m_t`: the first `t + 1` codewords
    /// in rank order.
    pub fn markers(&self, t: u64) -> Result<Vec<BitString>, MuError> {
        if t + 1 > self.size() {
            return Err(MuError::TooManyMarkers {
                requested: t + 1,
                size: self.size(),
            });
        }
        (0..=t).map(|i| self.unrank(i)).collect()
    }

    /// All positions where a codeword occurs in `bits`, with the codeword's
    /// index, in ascending order of position.
    pub fn scan(&self, bits: &[u8]) -> Vec<(usize, u64)> {
        let len = self.len;
        let mut found = Vec::new();
        if bits.len() < len {
            return found;
        }
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        let mut window = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            window = ((window << 1) | b as u64) & mask;
            if i + 1 >= len {
                if let Some(rank) = self.rank_word(window) {
                    found.push((i + 1 - len, rank));
                }
            }
        }
        found
    }

    fn check_len(&self, word: &BitString) -> Result<(), MuError> {
        if word.len() != self.len {
            return Err(MuError::WrongLength {
                got: word.len(),
                expected: self.len,
            });
        }
        Ok(())
    }

    fn assemble(&self, middle: u64) -> u64 {
        // 0^k 1 | middle | 1
        let head = 1u64 << (self.len - self.zero_prefix - 1);
        head | (middle << 1) | 1
    }

    fn middle_of(&self, word: u64) -> Option<u64> {
        let len = self.len;
        if len < 64 && word >> len != 0 {
            return None;
        }
        // Leading k zeros followed by a one, and a trailing one.
        if word >> (len - self.zero_prefix - 1) != 1 || word & 1 != 1 {
            return None;
        }
        let middle_mask = (1u64 << self.middle_len) - 1;
        Some((word >> 1) & middle_mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_is_codeword(code: &MuCode, w: &[u8]) -> bool {
        let k = code.zero_prefix();
        let l = code.len();
        if w.len() != l || w[..k].iter().any(|&b| b != 0) || w[k] != 1 || w[l - 1] != 1 {
            return false;
        }
        let mut run = 0;
        for &b in &w[k + 1..l - 1] {
            run = if b == 0 { run + 1 } else { 0 };
            if run >= k {
                return false;
            }
        }
        true
    }

    #[test]
    fn sizes_of_small_codes() {
        assert_eq!(mu_size(8).unwrap(), 4);
        assert_eq!(mu_size(12).unwrap(), 31);
        assert!(mu_size(7).is_err());
        assert!(mu_size(65).is_err());
    }

    #[test]
    fn size_meets_lower_bound() {
        for len in MIN_LEN..=MAX_LEN {
            let size = mu_size(len).unwrap() as f64;
            let bound = 2f64.powi(len as i32) / (32.0 * len as f64);
            assert!(size >= bound, "L={len}: {size} < {bound}");
        }
    }

    #[test]
    fn unrank_small_code() {
        let code = MuCode::new(8).unwrap();
        let words: Vec<String> = (0..4).map(|i| code.unrank(i).unwrap().to_string()).collect();
        assert_eq!(words, ["00001001", "00001011", "00001101", "00001111"]);
        assert!(code.unrank(4).is_err());
    }

    #[test]
    fn markers_are_leading_codewords() {
        let code = MuCode::new(8).unwrap();
        let markers: Vec<String> = code.markers(2).unwrap().iter().map(|m| m.to_string()).collect();
        assert_eq!(markers, ["00001001", "00001011", "00001101"]);
        assert_eq!(
            code.markers(4),
            Err(MuError::TooManyMarkers { requested: 5, size: 4 })
        );
    }

    #[test]
    fn rank_inverts_unrank_exhaustively() {
        for len in 8..=14 {
            let code = MuCode::new(len).unwrap();
            for i in 0..code.size() {
                let w = code.unrank_word(i).unwrap();
                assert_eq!(code.rank_word(w), Some(i));
            }
        }
    }

    #[test]
    fn membership_matches_shape_definition() {
        for len in [8usize, 10, 12] {
            let code = MuCode::new(len).unwrap();
            let mut count = 0;
            for w in 0u64..(1 << len) {
                let bits = BitString::from_u128(w as u128, len);
                let naive = naive_is_codeword(&code, bits.as_slice());
                assert_eq!(code.is_codeword_word(w), naive, "L={len} w={bits}");
                count += naive as u64;
            }
            assert_eq!(count, code.size());
        }
        let code = MuCode::new(8).unwrap();
        assert!(!code.is_codeword(&"00000000".parse().unwrap()).unwrap());
        assert!(code.is_codeword(&"0000100".parse().unwrap()).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let code = MuCode::new(12).unwrap();
        let words: Vec<u64> = (0..code.size()).map(|i| code.unrank_word(i).unwrap()).collect();
        assert!(words.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn prefix_suffix_disjoint_exhaustive() {
        for len in [8usize, 12] {
            let code = MuCode::new(len).unwrap();
            let words: Vec<BitString> = (0..code.size()).map(|i| code.unrank(i).unwrap()).collect();
            for a in &words {
                for b in &words {
                    for l in 1..len {
                        assert_ne!(
                            &a.as_slice()[..l],
                            &b.as_slice()[len - l..],
                            "prefix of {a} equals suffix of {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn no_codeword_inside_another() {
        let code = MuCode::new(12).unwrap();
        let words: Vec<BitString> = (0..code.size()).map(|i| code.unrank(i).unwrap()).collect();
        for a in &words {
            let mut doubled = a.clone();
            doubled.extend_from(a);
            let hits = code.scan(doubled.as_slice());
            assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![0, 12]);
        }
    }

    #[test]
    fn scan_finds_adjacent_codewords() {
        let code = MuCode::new(8).unwrap();
        let s = BitString::concat(&[&code.unrank(0).unwrap(), &code.unrank(1).unwrap()]);
        assert_eq!(code.scan(s.as_slice()), vec![(0, 0), (8, 1)]);
        let mut t = BitString::from_bits([1, 1, 1, 1, 1]);
        t.extend_from(&code.unrank(2).unwrap());
        t.extend_from_slice(&[1, 0]);
        assert_eq!(code.scan(t.as_slice()), vec![(5, 2)]);
        assert!(code.scan(&[]).is_empty());
    }
}
