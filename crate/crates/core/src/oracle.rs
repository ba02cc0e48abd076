//! Brute-force and closed-form companions to the construction:
//! exhaustive t-confusability, the redundancy lower bound, and the
//! histogram code over large alphabets.

use std::collections::HashSet;

use thiserror::Error;

use crate::bits::BitString;
use crate::channel::{all_patterns, break_ordered};

/// Longest word the exhaustive confusability search accepts.
pub const CONFUSABLE_MAX_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("words have lengths {0} and {1}; confusability compares equal lengths")]
    LengthMismatch(usize, usize),
    #[error("length {0} exceeds the exhaustive search cap of {CONFUSABLE_MAX_LEN}")]
    TooLong(usize),
    #[error("class index {index} is out of range; there are {classes} classes")]
    IndexOutOfRange { index: u128, classes: u128 },
    #[error("symbol {symbol} is outside the alphabet of size {q}")]
    AlphabetOverflow { symbol: u32, q: u32 },
    #[error("fragments hold {got} symbols, expected {expected}")]
    WrongTotal { got: usize, expected: usize },
    #[error("class count C({0}, {1}) overflows 128 bits")]
    Overflow(u64, u64),
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,
}

/// Every fragment multiset reachable from `x` with at most `t` cuts, each
/// in canonical (sorted) form.
pub fn reachable_multisets(x: &BitString, t: usize) -> HashSet<Vec<BitString>> {
    all_patterns(x.len(), t)
        .iter()
        .map(|p| {
            let mut frags = break_ordered(x, p);
            frags.sort();
            frags
        })
        .collect()
}

/// Whether some pattern of at most `t` cuts in `x` and some pattern of at
/// most `t` cuts in `y` give the same fragment multiset.
pub fn confusable(x: &BitString, y: &BitString, t: usize) -> Result<bool, OracleError> {
    if x.len() != y.len() {
        return Err(OracleError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() > CONFUSABLE_MAX_LEN {
        return Err(OracleError::TooLong(x.len()));
    }
    if x.count_ones() != y.count_ones() {
        return Ok(false);
    }
    let from_x = reachable_multisets(x, t);
    Ok(all_patterns(y.len(), t).iter().any(|p| {
        let mut frags = break_ordered(y, p);
        frags.sort();
        from_x.contains(&frags)
    }))
}

/// Whether no two distinct words of `code` are t-confusable.
pub fn is_break_resilient(code: &[BitString], t: usize) -> Result<bool, OracleError> {
    for (i, x) in code.iter().enumerate() {
        for y in &code[i + 1..] {
            if x != y && confusable(x, y, t)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `t' = floor((ceil((t + 1) / 2) - 1) / 2)`.
pub fn reduced_breaks(t: u64) -> u64 {
    (t + 1).div_ceil(2).saturating_sub(1) / 2
}

/// `log2 C(n, t') - log2 n` in bits, clamped at zero.
pub fn redundancy_lower_bound(n: u64, t: u64) -> f64 {
    let tp = reduced_breaks(t).min(n);
    let log_binom: f64 = (0..tp).map(|i| ((n - i) as f64 / (i + 1) as f64).log2()).sum();
    (log_binom - (n as f64).log2()).max(0.0)
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact; cancel first to avoid overflow
        let (num, den) = ((n - i) as u128, i as u128 + 1);
        let g = gcd(acc, den);
        acc = (acc / g).checked_mul(num / (den / g))?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of histograms of `n` symbols over an alphabet of size `q`.
pub fn class_count(q: u32, n: usize) -> Result<u128, OracleError> {
    if q == 0 {
        return Err(OracleError::EmptyAlphabet);
    }
    let top = q as u64 + n as u64 - 1;
    binomial(top, n as u64).ok_or(OracleError::Overflow(top, n as u64))
}

/// Symbol counts, indexed by symbol.
pub type Histogram = Vec<usize>;

/// Colex rank of a histogram: the sorted word `w_1 <= ... <= w_n` maps to
/// the combination `b_i = w_i + i - 1`, ranked as `sum C(b_i, i)`.
pub fn rank_histogram(h: &[usize]) -> Result<u128, OracleError> {
    let mut rank = 0u128;
    let mut i = 0u64;
    for (symbol, &count) in h.iter().enumerate() {
        for _ in 0..count {
            i += 1;
            let b = symbol as u64 + i - 1;
            rank += binomial(b, i).ok_or(OracleError::Overflow(b, i))?;
        }
    }
    Ok(rank)
}

pub fn unrank_histogram(index: u128, q: u32, n: usize) -> Result<Histogram, OracleError> {
    let classes = class_count(q, n)?;
    if index >= classes {
        return Err(OracleError::IndexOutOfRange { index, classes });
    }
    let mut h = vec![0usize; q as usize];
    let mut rest = index;
    let mut b = q as u64 + n as u64 - 2;
    for i in (1..=n as u64).rev() {
        // largest b with C(b, i) <= rest; b >= i - 1 always qualifies
        while binomial(b, i).expect("bounded by the class count") > rest {
            b -= 1;
        }
        rest -= binomial(b, i).expect("bounded by the class count");
        h[(b + 1 - i) as usize] += 1;
        b = b.saturating_sub(1);
    }
    Ok(h)
}

/// The canonical word of a class: its symbols in ascending order.
pub fn histogram_encode(index: u128, q: u32, n: usize) -> Result<Vec<u32>, OracleError> {
    let h = unrank_histogram(index, q, n)?;
    Ok(h.iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat_n(s as u32, c))
        .collect())
}

/// Counts symbols across all fragments and ranks the histogram.
pub fn histogram_decode(frags: &[Vec<u32>], q: u32, n: usize) -> Result<u128, OracleError> {
    let mut h = vec![0usize; q as usize];
    let mut total = 0;
    for &symbol in frags.iter().flatten() {
        let slot = h.get_mut(symbol as usize).ok_or(OracleError::AlphabetOverflow { symbol, q })?;
        *slot += 1;
        total += 1;
    }
    if total != n {
        return Err(OracleError::WrongTotal { got: total, expected: n });
    }
    rank_histogram(&h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legit::random_bits;
    use crate::seeded_rng;
    use rand::Rng;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn two_bit_words() {
        assert!(confusable(&bits("01"), &bits("10"), 1).unwrap());
        assert!(!confusable(&bits("01"), &bits("10"), 0).unwrap());
        for t in 0..3 {
            assert!(!confusable(&bits("00"), &bits("11"), t).unwrap());
        }
    }

    #[test]
    fn guards() {
        assert_eq!(confusable(&bits("0"), &bits("01"), 1), Err(OracleError::LengthMismatch(1, 2)));
        let long = BitString::zeros(17);
        assert_eq!(confusable(&long, &long, 1), Err(OracleError::TooLong(17)));
    }

    #[test]
    fn symmetric_and_reflexive() {
        let mut rng = seeded_rng(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..=9);
            let x = random_bits(&mut rng, n);
            let y = random_bits(&mut rng, n);
            let t = rng.gen_range(0..=3);
            assert_eq!(confusable(&x, &y, t).unwrap(), confusable(&y, &x, t).unwrap());
            assert!(confusable(&x, &x, 0).unwrap());
        }
    }

    #[test]
    fn toy_codes() {
        let weights = [bits("000"), bits("111")];
        assert!(is_break_resilient(&weights, 2).unwrap());
        let pair = [bits("0011"), bits("0101")];
        assert!(is_break_resilient(&pair, 1).unwrap());
        // {0, 01, 1} from both
        assert!(!is_break_resilient(&pair, 2).unwrap());
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(reduced_breaks(8), 2);
        assert_eq!(reduced_breaks(1), 0);
        assert_eq!(redundancy_lower_bound(4096, 1), 0.0);
        // log2(1024 * 1023 / 2) - 10
        let expected = (1024.0f64 * 1023.0 / 2.0).log2() - 10.0;
        assert!((redundancy_lower_bound(1024, 8) - expected).abs() < 1e-9);
        assert!((redundancy_lower_bound(1024, 8) - 9.0).abs() < 0.01);
        let mut prev = 0.0;
        for t in 1..=64 {
            let b = redundancy_lower_bound(4096, t);
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(8, 5), Some(56));
        assert_eq!(binomial(3, 5), Some(0));
        assert!(binomial(130, 65).is_some());
        assert_eq!(binomial(60, 30), Some(118264581564861424));
        assert_eq!(binomial(200, 100), None);
        assert_eq!(class_count(3, 2).unwrap(), 6);
        assert_eq!(class_count(4, 5).unwrap(), 56);
    }

    #[test]
    fn histogram_rank_is_a_bijection() {
        for (q, n) in [(4u32, 5usize), (3, 2), (1, 4), (5, 3), (2, 7)] {
            let classes = class_count(q, n).unwrap();
            let mut seen = HashSet::new();
            for i in 0..classes {
                let h = unrank_histogram(i, q, n).unwrap();
                assert_eq!(h.iter().sum::<usize>(), n);
                assert_eq!(rank_histogram(&h).unwrap(), i);
                assert!(seen.insert(h));
            }
        }
        assert!(unrank_histogram(56, 4, 5).is_err());
    }

    #[test]
    fn decoding_counts_symbols() {
        // "ab" and "a" over q = 2: histogram {a: 2, b: 1}
        let rank = histogram_decode(&[vec![0, 1], vec![0]], 2, 3).unwrap();
        assert_eq!(rank, rank_histogram(&[2, 1]).unwrap());
        assert_eq!(
            histogram_decode(&[vec![0, 7]], 2, 2),
            Err(OracleError::AlphabetOverflow { symbol: 7, q: 2 })
        );
        assert!(histogram_decode(&[vec![0]], 2, 2).is_err());
    }
}
