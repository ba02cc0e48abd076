//! Code parameters and the bit-exact redundancy layout.
//!
//! Every size the encoder and decoder agree on is derived here from the
//! triple `(m, t, c)`. A redundancy string is laid out as
//!
//! ```text
//! [ 4 adjacency parities, 2L bits each | 2 parities per level, L bits each | 3 residual parities, L bits each ]
//! ```
//!
//! so its length is `(11 + 2 * num_levels) * L`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::mu;

/// Fixed window constant of the legit-string analysis.
pub const BETA: u64 = 32;

/// Largest supported message length.
pub const MAX_MESSAGE_BITS: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error("t must be at least 1 (got 0)")]
    ZeroBreaks,
    #[error("m = {0} is not a power of two")]
    NotPowerOfTwo(u64),
    #[error("m = {0} exceeds the supported maximum of {MAX_MESSAGE_BITS} bits")]
    MessageTooLong(u64),
    #[error("c = {0} is below the minimum multiplier 3")]
    MultiplierTooSmall(u64),
    #[error("signature length L = c*log2(m) = {0} is odd; L/2-bit chunking needs an even L")]
    OddSignatureLength(u64),
    #[error("signature length L = {0} is shorter than the 8-bit minimum of the MU construction")]
    SignatureTooShort(u64),
    #[error("signature length L = {0} exceeds 64; adjacency symbols would not fit GF(2^128)")]
    SignatureTooLong(u64),
    #[error("t = {t} needs {needed} MU codewords but the code only has {available}")]
    TooFewCodewords { t: u64, needed: u64, available: u64 },
    #[error("t = {t} is too large: {what} needs {needed} field elements but GF(2^{width}) has {available}")]
    FieldTooSmall {
        t: u64,
        what: &'static str,
        width: u32,
        needed: u128,
        available: u128,
    },
    #[error("malformed parameter header: {0}")]
    BadHeader(String),
}

/// All derived code parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Params {
    /// Message length in bits.
    pub m: u64,
    /// Maximum number of breaks tolerated.
    pub t: u64,
    /// MU code length multiplier.
    pub c: u64,
    pub log_m: u64,
    /// Signature (MU codeword) length `c * log2(m)`.
    pub sig_len: u64,
    /// Legit-window length `2*beta*c*log2(m)^2 + L - 1`.
    pub window_len: u64,
    /// Signature recursion depth `ceil(log2(2*beta*log2(m)))`.
    pub num_levels: u64,
    /// Redundancy string length `(11 + 2*num_levels) * L`.
    pub u_len: u64,
    /// Codeword length `m + L + 3*t*u_len`.
    pub n: u64,
    /// Number of codewords in the MU code of length `L`.
    pub mu_size: u64,
}

impl Params {
    pub fn derive(m: u64, t: u64, c: u64) -> Result<Self, ParamsError> {
        if t == 0 {
            return Err(ParamsError::ZeroBreaks);
        }
        if m == 0 || !m.is_power_of_two() {
            return Err(ParamsError::NotPowerOfTwo(m));
        }
        if m > MAX_MESSAGE_BITS {
            return Err(ParamsError::MessageTooLong(m));
        }
        if c < 3 {
            return Err(ParamsError::MultiplierTooSmall(c));
        }
        let log_m = m.trailing_zeros() as u64;
        let sig_len = c * log_m;
        if !sig_len.is_multiple_of(2) {
            return Err(ParamsError::OddSignatureLength(sig_len));
        }
        if sig_len < mu::MIN_LEN as u64 {
            return Err(ParamsError::SignatureTooShort(sig_len));
        }
        if sig_len > 64 {
            return Err(ParamsError::SignatureTooLong(sig_len));
        }
        let window_len = 2 * BETA * c * log_m * log_m + sig_len - 1;
        let num_levels = ceil_log2(2 * BETA * log_m);
        let u_len = (11 + 2 * num_levels) * sig_len;
        let n = m + sig_len + 3 * t * u_len;
        let mu_size = mu::mu_size(sig_len as usize).expect("length validated above");

        let params = Params {
            m,
            t,
            c,
            log_m,
            sig_len,
            window_len,
            num_levels,
            u_len,
            n,
            mu_size,
        };
        params.check_fields()?;
        Ok(params)
    }

    fn check_fields(&self) -> Result<(), ParamsError> {
        let t = self.t;
        let l = self.sig_len;
        if self.mu_size < t + 2 {
            return Err(ParamsError::TooFewCodewords {
                t,
                needed: t + 2,
                available: self.mu_size,
            });
        }
        // Reed-Solomon lengths must fit their fields, never wrapping.
        let adj_available = field_order_minus_one(2 * l as u32);
        let adj_needed = self.mu_size as u128 + 4 * t as u128;
        if adj_needed > adj_available {
            return Err(ParamsError::FieldTooSmall {
                t,
                what: "adjacency code",
                width: 2 * l as u32,
                needed: adj_needed,
                available: adj_available,
            });
        }
        let sig_available = field_order_minus_one(l as u32);
        let sig_needed = (self.m / l + self.num_levels + 2 * t) as u128;
        let sig_code_needed = (self.info_len() / l + 3 * t) as u128;
        let needed = sig_needed.max(sig_code_needed);
        if needed > sig_available {
            return Err(ParamsError::FieldTooSmall {
                t,
                what: "signature/residual codes",
                width: l as u32,
                needed,
                available: sig_available,
            });
        }
        Ok(())
    }

    pub fn l(&self) -> usize {
        self.sig_len as usize
    }

    /// Length of the information region `m_0 ∘ z`.
    pub fn info_len(&self) -> u64 {
        self.m + self.sig_len
    }

    /// Extension degree of adjacency symbols.
    pub fn field_adj(&self) -> u32 {
        2 * self.sig_len as u32
    }

    /// Extension degree of signature and residual symbols.
    pub fn field_sig(&self) -> u32 {
        self.sig_len as u32
    }

    pub fn chunk_len(&self) -> usize {
        self.l() / 2
    }

    /// Number of marker-delimited chunks in one instrumented redundancy string.
    pub fn chunk_count(&self) -> usize {
        (2 * self.u_len / self.sig_len) as usize
    }

    pub fn instrumented_len(&self) -> usize {
        3 * self.u_len as usize
    }

    /// Start of the redundancy region's end, i.e. where `m_0` begins in a codeword.
    pub fn info_start(&self) -> usize {
        self.t as usize * self.instrumented_len()
    }

    /// Maximum start-to-start distance that can occur between level-0
    /// signatures of a legit string (including the end sentinel).
    pub fn max_signature_distance(&self) -> u64 {
        self.window_len
    }

    pub fn adjacency_parity_count(&self) -> usize {
        4 * self.t as usize
    }

    pub fn level_parity_count(&self) -> usize {
        2 * self.t as usize
    }

    pub fn residual_parity_count(&self) -> usize {
        3 * self.t as usize
    }

    /// Bit offset of adjacency parity `j` (0..4) inside a redundancy string.
    pub fn adjacency_offset(&self, j: usize) -> usize {
        assert!(j < 4, "adjacency parity slot {j} out of range");
        j * 2 * self.l()
    }

    /// Bit offset of parity `j` (0..2) of signature level `level` (1-based).
    pub fn level_offset(&self, level: usize, j: usize) -> usize {
        assert!(
            (1..=self.num_levels as usize).contains(&level) && j < 2,
            "level parity slot ({level}, {j}) out of range"
        );
        8 * self.l() + (level - 1) * 2 * self.l() + j * self.l()
    }

    /// Bit offset of residual parity `j` (0..3).
    pub fn residual_offset(&self, j: usize) -> usize {
        assert!(j < 3, "residual parity slot {j} out of range");
        8 * self.l() + 2 * self.l() * self.num_levels as usize + j * self.l()
    }

    /// The single header line shared by every file format.
    pub fn header(&self) -> String {
        format!("BRC1 m={} t={} c={}", self.m, self.t, self.c)
    }

    pub fn from_header(line: &str) -> Result<Self, ParamsError> {
        let bad = || ParamsError::BadHeader(line.to_string());
        let mut parts = line.split_whitespace();
        if parts.next() != Some("BRC1") {
            return Err(bad());
        }
        let mut field = |name: &str| -> Result<u64, ParamsError> {
            let part = parts.next().ok_or_else(bad)?;
            let value = part
                .strip_prefix(name)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(bad)?;
            value.parse().map_err(|_| bad())
        };
        let m = field("m")?;
        let t = field("t")?;
        let c = field("c")?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Params::derive(m, t, c)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.header())
    }
}

impl FromStr for Params {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Params::from_header(s.trim_end())
    }
}

fn ceil_log2(x: u64) -> u64 {
    debug_assert!(x >= 1);
    if x <= 1 {
        0
    } else {
        ((x - 1).ilog2() + 1) as u64
    }
}

fn field_order_minus_one(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}
