//! Legit information strings: sampling by rejection and verification.
//!
//! A string `z` of length `m` is legit when
//! (I) every length-`W` window contains a level-0 signature,
//! (II) no two non-overlapping length-`L` substrings are equal, and
//! (III) no marker `m_0..m_t` occurs in it.

use std::collections::{BTreeMap, HashMap};

use rand::RngCore;
use thiserror::Error;

use crate::bits::BitString;
use crate::mu::MuCode;
use crate::params::Params;
use crate::seeded_rng;

pub const DEFAULT_ATTEMPT_CAP: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LegitError {
    #[error("string has length {got}, expected m = {expected}")]
    WrongLength { got: usize, expected: u64 },
    #[error("no legit string after {0} attempts; parameters are outside the regime where random strings are legit")]
    GaveUp(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Violation {
    /// The window starting here contains no complete level-0 signature.
    WindowNoSignature { position: usize },
    /// Equal non-overlapping `L`-bit substrings at these positions.
    DuplicateWindow { first: usize, second: usize },
    /// Marker `m_marker` occurs at this position.
    MarkerPresent { position: usize, marker: u64 },
}

impl Violation {
    fn position(&self) -> usize {
        match *self {
            Violation::WindowNoSignature { position } => position,
            Violation::DuplicateWindow { second, .. } => second,
            Violation::MarkerPresent { position, .. } => position,
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::WindowNoSignature { position } => {
                write!(f, "WindowNoSignature: window at {position} has no level-0 signature")
            }
            Violation::DuplicateWindow { first, second } => {
                write!(f, "DuplicateWindow: substrings at {first} and {second} are equal")
            }
            Violation::MarkerPresent { position, marker } => {
                write!(f, "MarkerPresent: marker m_{marker} at {position}")
            }
        }
    }
}

/// Outcome of a legitimacy check; on failure, the violation detected at the
/// smallest position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegitReport {
    pub violation: Option<Violation>,
}

impl LegitReport {
    pub fn is_ok(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn check_legit(z: &BitString, params: &Params, code: &MuCode) -> Result<LegitReport, LegitError> {
    if z.len() as u64 != params.m {
        return Err(LegitError::WrongLength {
            got: z.len(),
            expected: params.m,
        });
    }
    let bits = z.as_slice();
    let l = params.l();
    let sigs = code.scan(bits);

    let marker = sigs
        .iter()
        .find(|&&(_, idx)| idx <= params.t)
        .map(|&(position, marker)| Violation::MarkerPresent { position, marker });
    let window = uncovered_window(&sigs, bits.len(), params.window_len as usize, l);
    let duplicate = first_duplicate(bits, l);

    let violation = [window, duplicate, marker]
        .into_iter()
        .flatten()
        .min_by_key(|v| v.position());
    Ok(LegitReport { violation })
}

/// First window start `p` such that no signature lies wholly inside `[p, p + w)`.
fn uncovered_window(sigs: &[(usize, u64)], len: usize, w: usize, l: usize) -> Option<Violation> {
    if w > len {
        return None;
    }
    let last_start = len - w;
    let reach = w - l;
    let mut candidate = 0usize;
    for &(s, _) in sigs {
        if s > candidate + reach {
            break;
        }
        candidate = candidate.max(s + 1);
    }
    (candidate <= last_start).then_some(Violation::WindowNoSignature { position: candidate })
}

fn first_duplicate(bits: &[u8], l: usize) -> Option<Violation> {
    if bits.len() < 2 * l {
        return None;
    }
    let mask = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
    let mut first_seen: HashMap<u64, usize> = HashMap::with_capacity(bits.len());
    let mut window = 0u64;
    for (i, &b) in bits.iter().enumerate() {
        window = ((window << 1) | b as u64) & mask;
        if i + 1 < l {
            continue;
        }
        let pos = i + 1 - l;
        let first = *first_seen.entry(window).or_insert(pos);
        if pos - first >= l {
            return Some(Violation::DuplicateWindow { first, second: pos });
        }
    }
    None
}

/// Uniform random `m`-bit strings until one is legit. Returns the string
/// and the number of draws, including the successful one.
pub fn sample_legit(params: &Params, code: &MuCode, seed: u64) -> Result<(BitString, u32), LegitError> {
    sample_legit_capped(params, code, seed, DEFAULT_ATTEMPT_CAP)
}

pub fn sample_legit_capped(
    params: &Params,
    code: &MuCode,
    seed: u64,
    cap: u32,
) -> Result<(BitString, u32), LegitError> {
    let mut rng = seeded_rng(seed);
    for attempt in 1..=cap {
        let z = random_bits(&mut rng, params.m as usize);
        if check_legit(&z, params, code)?.is_ok() {
            return Ok((z, attempt));
        }
    }
    Err(LegitError::GaveUp(cap))
}

pub fn random_bits<R: RngCore>(rng: &mut R, len: usize) -> BitString {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word = rng.next_u64();
        let take = (len - out.len()).min(64);
        out.extend((0..take).map(|i| ((word >> (63 - i)) & 1) as u8));
    }
    BitString::from(out)
}

/// Lengths of the runs strictly between consecutive level-0 signatures
/// (and the string ends).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapStats {
    pub max_gap: usize,
    /// Gap length to number of occurrences.
    pub histogram: BTreeMap<usize, usize>,
}

pub fn gap_stats(z: &BitString, params: &Params, code: &MuCode) -> GapStats {
    let l = params.l();
    let mut histogram = BTreeMap::new();
    let mut cursor = 0usize;
    for (pos, _) in code.scan(z.as_slice()) {
        *histogram.entry(pos - cursor).or_insert(0) += 1;
        cursor = pos + l;
    }
    *histogram.entry(z.len() - cursor).or_insert(0) += 1;
    GapStats {
        max_gap: histogram.keys().next_back().copied().unwrap_or(0),
        histogram,
    }
}
