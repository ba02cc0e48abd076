//! Systematic Reed-Solomon codes over GF(2^w) with sparse messages.
//!
//! A codeword is the polynomial
//!
//! ```text
//! c(x) = p_0 + p_1 x + ... + p_{P-1} x^{P-1} + m_0 x^P + m_1 x^{P+1} + ...
//! ```
//!
//! divisible by `g(x) = (x - a)(x - a^2)...(x - a^P)` for the canonical
//! primitive element `a`. Message symbol `i` therefore sits at locator
//! `a^(P+i)`. Messages may be astronomically long (the adjacency code has a
//! symbol per MU codeword) but have few nonzero symbols, so every routine
//! here runs in time proportional to the number of nonzeros.

mod poly;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::gf::{Gf, GfError};

/// Codes up to this length locate errors by exhaustive evaluation.
const CHIEN_LIMIT: u128 = 1 << 12;

pub(crate) use poly::Poly;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RsError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("code of {msg_len} message and {parity} parity symbols does not fit GF(2^{width})")]
    TooLong { msg_len: u64, parity: usize, width: u32 },
    #[error("a code needs at least one parity symbol")]
    NoParity,
    #[error("position {pos} out of range for message length {len}")]
    PositionOutOfRange { pos: u64, len: u64 },
    #[error("message positions must be strictly ascending")]
    Unsorted,
    #[error("symbol {0:#x} is not a field element")]
    OutOfField(u128),
    #[error("message length {got} does not match the code's {expected}")]
    LengthMismatch { got: u64, expected: u64 },
    #[error("expected {expected} parity symbols, got {got}")]
    ParityCount { got: usize, expected: usize },
    #[error("{erasures} erasures exceed the {parity} parity symbols")]
    TooManyErasures { erasures: usize, parity: usize },
    #[error("decoding failed: {0}")]
    Uncorrectable(&'static str),
}

/// A message given by its nonzero symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseMessage {
    msg_len: u64,
    entries: Vec<(u64, u128)>,
}

impl SparseMessage {
    pub fn new(msg_len: u64) -> Self {
        Self {
            msg_len,
            entries: Vec::new(),
        }
    }

    /// From strictly ascending `(position, value)` pairs; zero values are dropped.
    pub fn from_entries<I>(msg_len: u64, entries: I) -> Result<Self, RsError>
    where
        I: IntoIterator<Item = (u64, u128)>,
    {
        let mut out = Vec::new();
        let mut last: Option<u64> = None;
        for (pos, value) in entries {
            if pos >= msg_len {
                return Err(RsError::PositionOutOfRange { pos, len: msg_len });
            }
            if last.is_some_and(|l| l >= pos) {
                return Err(RsError::Unsorted);
            }
            last = Some(pos);
            if value != 0 {
                out.push((pos, value));
            }
        }
        Ok(Self {
            msg_len,
            entries: out,
        })
    }

    pub fn from_dense(symbols: &[u128]) -> Self {
        Self {
            msg_len: symbols.len() as u64,
            entries: symbols
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(i, &v)| (i as u64, v))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<u128> {
        let mut out = vec![0; self.msg_len as usize];
        for &(pos, v) in &self.entries {
            out[pos as usize] = v;
        }
        out
    }

    pub fn msg_len(&self) -> u64 {
        self.msg_len
    }

    pub fn entries(&self) -> &[(u64, u128)] {
        &self.entries
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, pos: u64) -> u128 {
        self.entries
            .binary_search_by_key(&pos, |e| e.0)
            .map_or(0, |i| self.entries[i].1)
    }
}

/// A possibly damaged codeword: the received message symbols, the message
/// positions known to be erased, and the parity symbols (`None` = erased).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedWord {
    pub message: SparseMessage,
    pub erased: Vec<u64>,
    pub parity: Vec<Option<u128>>,
}

impl ReceivedWord {
    pub fn new(message: SparseMessage, erased: Vec<u64>, parity: Vec<Option<u128>>) -> Self {
        Self {
            message,
            erased,
            parity,
        }
    }

    /// From dense symbol lists, `None` marking an erasure.
    pub fn from_symbols(message: &[Option<u128>], parity: &[Option<u128>]) -> Self {
        let msg_len = message.len() as u64;
        let entries = message
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.filter(|&v| v != 0).map(|v| (i as u64, v)));
        Self {
            message: SparseMessage::from_entries(msg_len, entries).expect("ascending by construction"),
            erased: (0..msg_len).filter(|&i| message[i as usize].is_none()).collect(),
            parity: parity.to_vec(),
        }
    }

    pub fn erasure_count(&self) -> usize {
        self.erased.len() + self.parity.iter().filter(|p| p.is_none()).count()
    }
}

/// Result of a successful decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub message: SparseMessage,
    pub parity: Vec<u128>,
    /// Symbols corrected at positions not marked as erasures.
    pub errors: usize,
    pub erasures: usize,
}

/// A systematic Reed-Solomon code with `parity` check symbols.
#[derive(Debug, Clone)]
pub struct RsCode {
    gf: Arc<Gf>,
    msg_len: u64,
    parity: usize,
    generator: Poly,
}

impl RsCode {
    pub fn new(width: u32, msg_len: u64, parity: usize) -> Result<Self, RsError> {
        let gf = Gf::standard(width)?;
        if parity == 0 {
            return Err(RsError::NoParity);
        }
        if msg_len as u128 + parity as u128 > gf.order() {
            return Err(RsError::TooLong {
                msg_len,
                parity,
                width,
            });
        }
        let alpha = gf.primitive_element();
        let mut generator = vec![1u128];
        let mut root = 1u128;
        for _ in 0..parity {
            root = gf.mul(root, alpha);
            generator = poly::mul(&gf, &generator, &[root, 1]);
        }
        Ok(Self {
            gf,
            msg_len,
            parity,
            generator,
        })
    }

    pub fn field(&self) -> &Gf {
        &self.gf
    }

    pub fn msg_len(&self) -> u64 {
        self.msg_len
    }

    pub fn parity_count(&self) -> usize {
        self.parity
    }

    /// Generator polynomial coefficients, lowest degree first.
    pub fn generator(&self) -> &[u128] {
        &self.generator
    }

    fn locator(&self, coeff_index: u128) -> u128 {
        self.gf.exp(coeff_index)
    }

    fn check_message(&self, msg: &SparseMessage) -> Result<(), RsError> {
        if msg.msg_len != self.msg_len {
            return Err(RsError::LengthMismatch {
                got: msg.msg_len,
                expected: self.msg_len,
            });
        }
        if let Some(&(_, v)) = msg.entries.iter().find(|(_, v)| !self.gf.contains(*v)) {
            return Err(RsError::OutOfField(v));
        }
        Ok(())
    }

    /// `S_k = sum_i v_i X_i^k` for `k = 1..=P` over the given `(locator, value)` terms.
    fn accumulate_syndromes(&self, syn: &mut [u128], locator: u128, value: u128) {
        let mut power = locator;
        for s in syn.iter_mut() {
            *s ^= self.gf.mul(value, power);
            power = self.gf.mul(power, locator);
        }
    }

    fn message_syndromes(&self, msg: &SparseMessage, skip: &[u64]) -> Vec<u128> {
        let mut syn = vec![0u128; self.parity];
        for &(pos, v) in &msg.entries {
            if skip.binary_search(&pos).is_ok() {
                continue;
            }
            let x = self.locator(self.parity as u128 + pos as u128);
            self.accumulate_syndromes(&mut syn, x, v);
        }
        syn
    }

    /// Parity symbols of a sparse message.
    ///
    /// The parity block is the unique solution making every syndrome vanish,
    /// obtained by erasure-decoding the `P` parity slots; it coincides with
    /// `x^P m(x) mod g(x)`.
    pub fn encode(&self, msg: &SparseMessage) -> Result<Vec<u128>, RsError> {
        self.check_message(msg)?;
        let syn = self.message_syndromes(msg, &[]);
        let locs: Vec<(u128, u128)> = (0..self.parity as u128).map(|j| (j, self.locator(j))).collect();
        let values = self.forney(&syn, &locs, None)?;
        Ok(values.into_iter().map(|(_, v)| v).collect())
    }

    /// Reference encoder by long division of the dense message polynomial.
    pub fn encode_dense(&self, msg: &[u128]) -> Result<Vec<u128>, RsError> {
        self.check_message(&SparseMessage::from_dense(msg))?;
        let mut shifted = vec![0u128; self.parity];
        shifted.extend_from_slice(msg);
        let mut r = poly::rem(&self.gf, &shifted, &self.generator);
        r.resize(self.parity, 0);
        Ok(r)
    }

    /// `S_1..S_P` of a received word, erasures read as zero.
    pub fn syndromes(&self, recv: &ReceivedWord) -> Vec<u128> {
        let mut syn = self.message_syndromes(&recv.message, &recv.erased);
        for (j, p) in recv.parity.iter().enumerate() {
            if let Some(v) = p.filter(|&v| v != 0) {
                self.accumulate_syndromes(&mut syn, self.locator(j as u128), v);
            }
        }
        syn
    }

    fn check_received(&self, recv: &ReceivedWord) -> Result<Vec<(u128, u128)>, RsError> {
        self.check_message(&recv.message)?;
        if recv.parity.len() != self.parity {
            return Err(RsError::ParityCount {
                got: recv.parity.len(),
                expected: self.parity,
            });
        }
        if let Some(v) = recv.parity.iter().flatten().find(|v| !self.gf.contains(**v)) {
            return Err(RsError::OutOfField(*v));
        }
        if recv.erased.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RsError::Unsorted);
        }
        if let Some(&pos) = recv.erased.iter().find(|&&p| p >= self.msg_len) {
            return Err(RsError::PositionOutOfRange {
                pos,
                len: self.msg_len,
            });
        }
        let erasures = recv.erasure_count();
        if erasures > self.parity {
            return Err(RsError::TooManyErasures {
                erasures,
                parity: self.parity,
            });
        }
        let mut locs = Vec::with_capacity(erasures);
        for (j, p) in recv.parity.iter().enumerate() {
            if p.is_none() {
                locs.push((j as u128, self.locator(j as u128)));
            }
        }
        for &pos in &recv.erased {
            let idx = self.parity as u128 + pos as u128;
            locs.push((idx, self.locator(idx)));
        }
        Ok(locs)
    }

    /// Corrects up to `e` errors and `f` erasures whenever `2e + f <= P`.
    pub fn decode(&self, recv: &ReceivedWord) -> Result<Decoded, RsError> {
        let erasure_locs = self.check_received(recv)?;
        let syn = self.syndromes(recv);
        let f = erasure_locs.len();
        let gamma = self.locator_poly(erasure_locs.iter().map(|l| l.1));

        // Berlekamp-Massey seeded with the erasure locator.
        let p = self.parity;
        let mut lambda = gamma.clone();
        let mut prev = gamma.clone();
        let mut len = f;
        let mut shift = 1usize;
        let mut prev_disc = 1u128;
        for r in f..p {
            let mut disc = 0u128;
            for (i, &c) in lambda.iter().enumerate().take(len + 1) {
                if i <= r {
                    disc ^= self.gf.mul(c, syn[r - i]);
                }
            }
            if disc == 0 {
                shift += 1;
                continue;
            }
            let coef = self.gf.mul(disc, self.gf.inv(prev_disc).expect("nonzero"));
            let mut update = vec![0u128; shift];
            update.extend(poly::scale(&self.gf, &prev, coef));
            let next = poly::add(&lambda, &update);
            if 2 * len <= r + f {
                prev = std::mem::replace(&mut lambda, next);
                len = r + 1 + f - len;
                prev_disc = disc;
                shift = 1;
            } else {
                lambda = next;
                shift += 1;
            }
        }
        let errors = len - f;
        if 2 * errors + f > p {
            return Err(RsError::Uncorrectable("errata exceed the parity budget"));
        }
        let (sigma, leftover) = poly::div_rem(&self.gf, &lambda, &gamma);
        if !leftover.is_empty() || poly::degree(&sigma) != Some(errors) {
            return Err(RsError::Uncorrectable("error locator has the wrong degree"));
        }
        let mut locs = erasure_locs;
        for (idx, x) in self.error_locations(&sigma, errors)? {
            if locs.iter().any(|l| l.0 == idx) {
                return Err(RsError::Uncorrectable("error coincides with an erasure"));
            }
            locs.push((idx, x));
        }
        let values = self.forney(&syn, &locs, Some(&lambda))?;
        if values[f..].iter().any(|&(_, v)| v == 0) {
            return Err(RsError::Uncorrectable("zero error magnitude"));
        }
        Ok(self.apply(recv, &values, errors))
    }

    /// `(coefficient index, locator)` for each root of the error locator:
    /// a Chien search over short codes, root splitting plus discrete
    /// logarithms over long ones.
    fn error_locations(&self, sigma: &Poly, errors: usize) -> Result<Vec<(u128, u128)>, RsError> {
        let n = self.parity as u128 + self.msg_len as u128;
        if n <= CHIEN_LIMIT {
            // sigma(1/x) = 0 exactly when the reversed polynomial vanishes at x
            let reversed: Poly = sigma.iter().rev().copied().collect();
            let alpha = self.gf.exp(1);
            let mut x = 1u128;
            let mut found = Vec::with_capacity(errors);
            for idx in 0..n {
                if poly::eval(&self.gf, &reversed, x) == 0 {
                    found.push((idx, x));
                }
                x = self.gf.mul(x, alpha);
            }
            if found.len() != errors {
                return Err(RsError::Uncorrectable("error locator roots outside the code"));
            }
            return Ok(found);
        }
        let roots = poly::distinct_roots(&self.gf, sigma)
            .ok_or(RsError::Uncorrectable("error locator does not split"))?;
        roots
            .into_iter()
            .map(|root| {
                let x = self.gf.inv(root).ok_or(RsError::Uncorrectable("zero root"))?;
                let idx = self
                    .gf
                    .log(x)
                    .filter(|&i| i < n)
                    .ok_or(RsError::Uncorrectable("error position outside the code"))?;
                Ok((idx, x))
            })
            .collect()
    }

    /// Fills erasures only, checking the result against every syndrome.
    pub fn decode_erasures(&self, recv: &ReceivedWord) -> Result<Decoded, RsError> {
        let locs = self.check_received(recv)?;
        let syn = self.syndromes(recv);
        let values = self.forney(&syn, &locs, None)?;
        Ok(self.apply(recv, &values, 0))
    }

    fn locator_poly(&self, xs: impl Iterator<Item = u128>) -> Poly {
        xs.fold(vec![1u128], |acc, x| poly::mul(&self.gf, &acc, &[1, x]))
    }

    /// Errata magnitudes at `(coefficient index, locator)` pairs, verified to
    /// reproduce the syndromes exactly.
    fn forney(
        &self,
        syn: &[u128],
        locs: &[(u128, u128)],
        lambda: Option<&Poly>,
    ) -> Result<Vec<(u128, u128)>, RsError> {
        let owned;
        let lambda = match lambda {
            Some(l) => l,
            None => {
                owned = self.locator_poly(locs.iter().map(|l| l.1));
                &owned
            }
        };
        let mut omega = poly::mul(&self.gf, syn, lambda);
        omega.truncate(self.parity);
        let dlambda = poly::derivative(lambda);
        let mut out = Vec::with_capacity(locs.len());
        let mut check = vec![0u128; self.parity];
        for &(idx, x) in locs {
            let xinv = self.gf.inv(x).expect("locators are nonzero");
            let den = poly::eval(&self.gf, &dlambda, xinv);
            if den == 0 {
                return Err(RsError::Uncorrectable("repeated errata locator"));
            }
            let value = self
                .gf
                .div(poly::eval(&self.gf, &omega, xinv), den)
                .expect("nonzero denominator");
            self.accumulate_syndromes(&mut check, x, value);
            out.push((idx, value));
        }
        if check != syn {
            return Err(RsError::Uncorrectable("syndromes inconsistent with errata"));
        }
        Ok(out)
    }

    fn apply(&self, recv: &ReceivedWord, values: &[(u128, u128)], errors: usize) -> Decoded {
        let p = self.parity as u128;
        let mut parity: Vec<u128> = recv.parity.iter().map(|s| s.unwrap_or(0)).collect();
        let mut msg: BTreeMap<u64, u128> = recv
            .message
            .entries
            .iter()
            .filter(|(pos, _)| recv.erased.binary_search(pos).is_err())
            .copied()
            .collect();
        for &(idx, v) in values {
            if idx < p {
                parity[idx as usize] ^= v;
            } else {
                *msg.entry((idx - p) as u64).or_insert(0) ^= v;
            }
        }
        Decoded {
            message: SparseMessage::from_entries(self.msg_len, msg).expect("ordered map"),
            parity,
            errors,
            erasures: recv.erasure_count(),
        }
    }
}
