//! The decoder: recovers `z` from the fragment multiset of a codeword
//! broken at most `t` times.
//!
//! Stages: split at `m_0` and classify fragments; collect the approximate
//! adjacency matrix and the surviving redundancy strings; repair the
//! adjacency matrix and place level-0 signatures; affix fragments; repair
//! each signature level in turn; finally repair the residuals.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::bits::{bits_to_u128, BitString};
use crate::channel::FragmentMultiset;
use crate::encoder::{
    depad, next_level_positions, pad, residual_spans, AdjacencyMatrix, Codec, EncodeError,
    SignatureStore,
};
use crate::rs::{ReceivedWord, RsCode, RsError, SparseMessage};

const UNKNOWN: u8 = 2;

/// Which Reed-Solomon repair gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Adjacency,
    Level(usize),
    Residuals,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::Adjacency => f.write_str("adjacency matrix"),
            Stage::Level(l) => write!(f, "level-{l} signatures"),
            Stage::Residuals => f.write_str("residuals"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("break budget exceeded: repairing the {stage} failed ({source})")]
    BudgetExceeded { stage: Stage, source: RsError },
    #[error("fragments disagree on the successor of codeword {row}")]
    ConflictingRows { row: u64 },
    #[error("two different copies of redundancy string {0}")]
    ConflictingStrings(u64),
    #[error("write conflict at information-region position {0}")]
    WriteConflict(usize),
    #[error("write at position {0} disagrees with the ground truth")]
    TruthViolation(usize),
    #[error("repaired data is inconsistent: {0}")]
    Inconsistent(&'static str),
    #[error("{0} bits of the information region remain unknown")]
    Unresolved(usize),
    #[error(transparent)]
    Encoding(#[from] EncodeError),
}

/// How the fragments were sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Classification {
    /// Fragments containing a marker `m_1..m_t`.
    pub r: Vec<BitString>,
    /// Information-region fragments: at least `3L` bits or containing a codeword.
    pub z: Vec<BitString>,
    pub discarded: Vec<BitString>,
}

/// Counters gathered while decoding.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeReport {
    pub r_fragments: usize,
    pub z_fragments: usize,
    pub discarded: usize,
    pub strings_recovered: usize,
    /// Adjacency rows corrected (missing or stale in the approximate matrix).
    pub adjacency_errors: usize,
    /// Erasures per level, parity erasures included.
    pub level_erasures: Vec<usize>,
    pub residual_erasures: usize,
    /// Z-fragments never affixed.
    pub unaffixed: usize,
}

/// The information region under reconstruction: each cell 0, 1 or unknown.
#[derive(Debug, Clone)]
pub struct PartialString<'a> {
    cells: Vec<u8>,
    truth: Option<&'a [u8]>,
}

impl<'a> PartialString<'a> {
    fn new(len: usize, truth: Option<&'a [u8]>) -> Self {
        Self {
            cells: vec![UNKNOWN; len],
            truth,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn unknown(&self) -> usize {
        self.cells.iter().filter(|&&c| c == UNKNOWN).count()
    }

    fn write(&mut self, pos: usize, bits: &[u8]) -> Result<(), DecodeError> {
        if pos + bits.len() > self.cells.len() {
            return Err(DecodeError::Inconsistent("write past the end of the information region"));
        }
        for (i, &b) in bits.iter().enumerate() {
            let at = pos + i;
            let cell = &mut self.cells[at];
            if *cell != UNKNOWN && *cell != b {
                return Err(DecodeError::WriteConflict(at));
            }
            if let Some(truth) = self.truth {
                if truth[at] != b {
                    return Err(DecodeError::TruthViolation(at));
                }
            }
            *cell = b;
        }
        Ok(())
    }

    fn write_word(&mut self, pos: usize, value: u64, l: usize) -> Result<(), DecodeError> {
        self.write(pos, BitString::from_u128(value as u128, l).as_slice())
    }

    /// The `len` bits at `pos`, if all known.
    fn read(&self, pos: usize, len: usize) -> Option<&[u8]> {
        let s = self.cells.get(pos..pos + len)?;
        (!s.contains(&UNKNOWN)).then_some(s)
    }

    fn agrees(&self, offset: usize, bits: &[u8]) -> bool {
        self.cells[offset..offset + bits.len()]
            .iter()
            .zip(bits)
            .all(|(&c, &b)| c == UNKNOWN || c == b)
    }

    fn into_bits(self, from: usize) -> Result<BitString, DecodeError> {
        let unknown = self.cells[from..].iter().filter(|&&c| c == UNKNOWN).count();
        if unknown > 0 {
            return Err(DecodeError::Unresolved(unknown));
        }
        Ok(BitString::from(self.cells[from..].to_vec()))
    }
}

impl Codec {
    pub fn decode(&self, frags: &FragmentMultiset) -> Result<BitString, DecodeError> {
        self.decode_detailed(frags, None).map(|(z, _)| z)
    }

    /// Decodes, optionally checking every write against the true
    /// information region `y = m_0 ∘ z`.
    pub fn decode_detailed(
        &self,
        frags: &FragmentMultiset,
        truth: Option<&BitString>,
    ) -> Result<(BitString, DecodeReport), DecodeError> {
        let p = self.params();
        let l = p.l();
        let t = p.t;
        let mut report = DecodeReport::default();

        let class = self.split_and_classify(frags);
        report.r_fragments = class.r.len();
        report.z_fragments = class.z.len();
        report.discarded = class.discarded.len();

        let approx = self.approx_adjacency(&class.z)?;
        let strings = self.redundancy_strings(&class.r)?;
        report.strings_recovered = strings.len();

        let (adjacency, corrected) = self.repair_adjacency(&approx, &strings)?;
        report.adjacency_errors = corrected;

        let mut y = PartialString::new(self.info_len(), truth.map(|b| b.as_slice()));
        let mut store = self.place_level0(&adjacency, &mut y)?;
        let mut pending = class.z;
        self.affix(&store, &mut pending, &mut y)?;

        for level in 1..=p.num_levels as usize {
            let keys: Vec<usize> = store.keys().copied().collect();
            let mut updated: BTreeMap<usize, Option<u64>> = store.iter().map(|(&k, &v)| (k, Some(v))).collect();
            for u in next_level_positions(&keys, y.len(), l) {
                updated.insert(u, y.read(u, l).map(|b| bits_to_u128(b) as u64));
            }
            let parity = self.collect_parity(&strings, 2, l, |j| p.level_offset(level, j));
            let (values, erasures) = repair_erasures(p.field_sig(), &updated, parity, Stage::Level(level))?;
            report.level_erasures.push(erasures);
            store = SignatureStore::new();
            for (&pos, &value) in updated.keys().zip(&values) {
                y.write_word(pos, value, l)?;
                store.insert(pos, value);
            }
            self.affix(&store, &mut pending, &mut y)?;
        }
        report.unaffixed = pending.len();

        let keys: Vec<usize> = store.keys().copied().collect();
        let spans = residual_spans(&keys, y.len(), l)
            .ok_or(DecodeError::Inconsistent("signature spacing outside [L, 2L) after all levels"))?;
        let mut residuals: BTreeMap<usize, Option<u64>> = BTreeMap::new();
        for &(key, len) in &spans {
            let value = match y.read(key, len) {
                Some(bits) => Some(pad(bits, l)?),
                None => None,
            };
            residuals.insert(key, value);
        }
        let parity = self.collect_parity(&strings, 3, l, |j| p.residual_offset(j));
        let (values, erasures) = repair_erasures(p.field_sig(), &residuals, parity, Stage::Residuals)?;
        report.residual_erasures = erasures;
        for (&(key, len), &value) in spans.iter().zip(&values) {
            let bits = depad(value, l).map_err(|_| DecodeError::Inconsistent("residual padding"))?;
            if bits.len() != len {
                return Err(DecodeError::Inconsistent("residual length"));
            }
            y.write(key, bits.as_slice())?;
        }
        debug_assert!(t >= 1);
        Ok((y.into_bits(l)?, report))
    }

    /// Splits the fragment containing `m_0` just before it, then sorts
    /// fragments into redundancy, information and discarded classes.
    pub fn split_and_classify(&self, frags: &FragmentMultiset) -> Classification {
        let t = self.params().t;
        let three_l = 3 * self.params().l();
        let mut pieces = Vec::with_capacity(frags.len() + 1);
        let mut split_done = false;
        for f in frags.fragments() {
            let m0 = if split_done {
                None
            } else {
                self.mu().scan(f.as_slice()).into_iter().find(|&(_, idx)| idx == 0)
            };
            match m0 {
                Some((i, _)) => {
                    split_done = true;
                    if i > 0 {
                        pieces.push(f.slice(0..i));
                    }
                    pieces.push(f.slice(i..f.len()));
                }
                None => pieces.push(f.clone()),
            }
        }
        pieces.sort();
        let mut class = Classification::default();
        for f in pieces {
            let hits = self.mu().scan(f.as_slice());
            if hits.iter().any(|&(_, idx)| idx >= 1 && idx <= t) {
                class.r.push(f);
            } else if f.len() >= three_l || !hits.is_empty() {
                class.z.push(f);
            } else {
                class.discarded.push(f);
            }
        }
        class
    }

    /// Rows from consecutive codeword occurrences inside single fragments.
    pub fn approx_adjacency(&self, zfrags: &[BitString]) -> Result<AdjacencyMatrix, DecodeError> {
        let mut adj = AdjacencyMatrix::new();
        for f in zfrags {
            let hits = self.mu().scan(f.as_slice());
            for pair in hits.windows(2) {
                let ((i, a), (i_next, b)) = (pair[0], pair[1]);
                let row = (b, (i_next - i) as u64);
                if let Some(prev) = adj.insert(a, row.0, row.1) {
                    if prev != row {
                        return Err(DecodeError::ConflictingRows { row: a });
                    }
                }
            }
        }
        Ok(adj)
    }

    /// Redundancy strings recoverable from complete marker runs, by index `1..=t`.
    pub fn redundancy_strings(&self, rfrags: &[BitString]) -> Result<BTreeMap<u64, BitString>, DecodeError> {
        let p = self.params();
        let l = p.l();
        let chunk = p.chunk_len();
        let stride = l + chunk;
        let count = p.chunk_count();
        let mut out: BTreeMap<u64, BitString> = BTreeMap::new();
        for f in rfrags {
            let mut by_marker: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            for (pos, idx) in self.mu().scan(f.as_slice()) {
                if (1..=p.t).contains(&idx) {
                    by_marker.entry(idx).or_default().push(pos);
                }
            }
            for (idx, positions) in by_marker {
                let Some(run) = positions.windows(count).find(|w| w.windows(2).all(|d| d[1] - d[0] == stride)) else {
                    continue;
                };
                let last = run[count - 1];
                if last + stride > f.len() {
                    continue;
                }
                let mut u = BitString::new();
                for &pos in run {
                    u.extend_from_slice(&f.as_slice()[pos + l..pos + stride]);
                }
                if let Some(prev) = out.insert(idx, u.clone()) {
                    if prev != u {
                        return Err(DecodeError::ConflictingStrings(idx));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Parity symbols `per_string` at a time from each string, `None` for
    /// missing strings.
    fn collect_parity(
        &self,
        strings: &BTreeMap<u64, BitString>,
        per_string: usize,
        width: usize,
        offset: impl Fn(usize) -> usize,
    ) -> Vec<Option<u128>> {
        let mut out = Vec::with_capacity(per_string * self.params().t as usize);
        for idx in 1..=self.params().t {
            for j in 0..per_string {
                out.push(strings.get(&idx).map(|u| u.read_u128(offset(j), width)));
            }
        }
        out
    }

    /// Errors-and-erasures repair of the approximate adjacency matrix.
    pub fn repair_adjacency(
        &self,
        approx: &AdjacencyMatrix,
        strings: &BTreeMap<u64, BitString>,
    ) -> Result<(AdjacencyMatrix, usize), DecodeError> {
        let p = self.params();
        let code = RsCode::new(p.field_adj(), p.mu_size, p.adjacency_parity_count())
            .map_err(|source| DecodeError::BudgetExceeded { stage: Stage::Adjacency, source })?;
        let parity = self.collect_parity(strings, 4, 2 * p.l(), |j| p.adjacency_offset(j));
        let recv = ReceivedWord::new(approx.to_message(p), Vec::new(), parity);
        let decoded = code
            .decode(&recv)
            .map_err(|source| DecodeError::BudgetExceeded { stage: Stage::Adjacency, source })?;
        let adj = AdjacencyMatrix::from_message(&decoded.message, p.l())?;
        Ok((adj, decoded.errors))
    }

    /// Walks the adjacency path from `m_0`, writing each level-0 signature.
    fn place_level0(&self, adj: &AdjacencyMatrix, y: &mut PartialString) -> Result<SignatureStore, DecodeError> {
        let l = self.params().l();
        let path = adj.walk(0);
        if !adj.is_empty() && path.len() <= adj.len() {
            return Err(DecodeError::Inconsistent("adjacency rows do not form a single path from m_0"));
        }
        let mut store = SignatureStore::new();
        for (idx, pos) in path {
            let word = self
                .mu()
                .unrank_word(idx)
                .map_err(|_| DecodeError::Inconsistent("successor index outside the MU code"))?;
            if pos + l > y.len() {
                return Err(DecodeError::Inconsistent("signature placed past the end"));
            }
            y.write_word(pos, word, l)?;
            store.insert(pos, word);
        }
        Ok(store)
    }

    /// Writes every pending fragment whose position is implied by a known
    /// signature it contains. A fragment whose matches imply more than one
    /// offset consistent with the known cells stays pending.
    fn affix(&self, store: &SignatureStore, pending: &mut Vec<BitString>, y: &mut PartialString) -> Result<(), DecodeError> {
        let l = self.params().l();
        let by_value: HashMap<u64, usize> = store.iter().map(|(&k, &v)| (v, k)).collect();
        let mask = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
        let mut progress = true;
        while progress {
            progress = false;
            let mut keep = Vec::with_capacity(pending.len());
            for f in pending.drain(..) {
                let bits = f.as_slice();
                let mut offsets: Vec<usize> = Vec::new();
                let mut window = 0u64;
                for (i, &b) in bits.iter().enumerate() {
                    window = ((window << 1) | b as u64) & mask;
                    if i + 1 < l {
                        continue;
                    }
                    let start = i + 1 - l;
                    if let Some(&pos) = by_value.get(&window) {
                        if pos >= start && pos - start + bits.len() <= y.len() {
                            offsets.push(pos - start);
                        }
                    }
                }
                offsets.sort_unstable();
                offsets.dedup();
                offsets.retain(|&o| y.agrees(o, bits));
                if let [offset] = offsets[..] {
                    y.write(offset, bits)?;
                    progress = true;
                } else {
                    keep.push(f);
                }
            }
            *pending = keep;
        }
        Ok(())
    }
}

/// Erasure-only repair of an ordered store; returns the full value list and
/// the erasure count (parity erasures included).
fn repair_erasures(
    width: u32,
    store: &BTreeMap<usize, Option<u64>>,
    parity: Vec<Option<u128>>,
    stage: Stage,
) -> Result<(Vec<u64>, usize), DecodeError> {
    let fail = |source| DecodeError::BudgetExceeded { stage, source };
    let code = RsCode::new(width, store.len() as u64, parity.len()).map_err(fail)?;
    let mut entries = Vec::new();
    let mut erased = Vec::new();
    for (i, v) in store.values().enumerate() {
        match v {
            Some(v) => entries.push((i as u64, *v as u128)),
            None => erased.push(i as u64),
        }
    }
    let msg = SparseMessage::from_entries(store.len() as u64, entries).expect("ascending");
    let recv = ReceivedWord::new(msg, erased, parity);
    let erasures = recv.erasure_count();
    let decoded = code.decode_erasures(&recv).map_err(fail)?;
    let values = decoded.message.to_dense().into_iter().map(|v| v as u64).collect();
    Ok((values, erasures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{attack, break_at, drop_short, AttackContext, BreakPattern};
    use crate::legit::sample_legit;
    use crate::params::Params;
    use crate::seeded_rng;
    use rand::seq::SliceRandom;

    fn setup(m: u64, t: u64, seed: u64) -> (Codec, BitString, crate::encoder::Encoding) {
        let codec = Codec::new(Params::derive(m, t, 3).unwrap());
        let (z, _) = sample_legit(codec.params(), codec.mu(), seed).unwrap();
        let enc = codec.encode_detailed(&z).unwrap();
        (codec, z, enc)
    }

    fn decode_pattern(codec: &Codec, enc: &crate::encoder::Encoding, cuts: Vec<usize>) -> Result<(BitString, DecodeReport), DecodeError> {
        let pattern = BreakPattern::new(cuts, enc.codeword.len()).unwrap();
        let frags = break_at(&enc.codeword, &pattern).unwrap();
        codec.decode_detailed(&frags, Some(&enc.y))
    }

    #[test]
    fn unbroken_codeword() {
        let (codec, z, enc) = setup(256, 2, 1);
        let (out, report) = decode_pattern(&codec, &enc, vec![]).unwrap();
        assert_eq!(out, z);
        assert_eq!(report.strings_recovered, 2);
        assert!(report.level_erasures.iter().all(|&e| e == 0));
        assert_eq!(report.adjacency_errors, 0);
    }

    #[test]
    fn classification() {
        let (codec, _, enc) = setup(256, 2, 2);
        let l = codec.params().l();
        let start = codec.params().info_start();
        let cw = &enc.codeword;
        // one fragment straddling the transition, one R, one short info piece
        let frags: FragmentMultiset = [
            cw.slice(0..start - 10),
            cw.slice(start - 10..start + 100),
            cw.slice(start + 100..start + 100 + 2 * l),
            cw.slice(start + 100 + 2 * l..cw.len()),
        ]
        .into_iter()
        .collect();
        let class = codec.split_and_classify(&frags);
        assert_eq!(class.r, vec![cw.slice(0..start - 10)]);
        assert!(class.z.contains(&cw.slice(start..start + 100)));
        assert!(class.discarded.contains(&cw.slice(start - 10..start)));
        let short = cw.slice(start + 100..start + 100 + 2 * l);
        assert_eq!(class.discarded.contains(&short), codec.mu().scan(short.as_slice()).is_empty());
    }

    #[test]
    fn approximate_matrix_without_breaks_is_exact() {
        let (codec, _, enc) = setup(1 << 14, 2, 3);
        let class = codec.split_and_classify(&FragmentMultiset::new(vec![enc.codeword.clone()]));
        assert_eq!(codec.approx_adjacency(&class.z).unwrap(), enc.adjacency);
        let strings = codec.redundancy_strings(&class.r).unwrap();
        assert_eq!(strings.values().cloned().collect::<Vec<_>>(), enc.redundancy);
    }

    #[test]
    fn break_inside_a_signature_drops_its_rows() {
        let (codec, _, enc) = setup(1 << 14, 2, 4);
        let start = codec.params().info_start();
        let (&pos, _) = enc.level0.iter().nth(3).unwrap();
        let cut = start + pos + 5;
        let frags = break_at(&enc.codeword, &BreakPattern::new(vec![cut], enc.codeword.len()).unwrap()).unwrap();
        let class = codec.split_and_classify(&frags);
        let approx = codec.approx_adjacency(&class.z).unwrap();
        let diff = enc.adjacency.rows().filter(|(a, r)| approx.get(*a) != Some(*r)).count();
        assert_eq!(diff, 2);
        assert!(approx.rows().all(|(a, r)| enc.adjacency.get(a) == Some(r)));
    }

    #[test]
    fn partial_marker_run_is_rejected() {
        let (codec, _, enc) = setup(256, 3, 5);
        let inst = codec.params().instrumented_len();
        // cut inside the last chunk of the first instrumented string (u_3)
        let cut = inst - 3;
        let frags = break_at(&enc.codeword, &BreakPattern::new(vec![cut], enc.codeword.len()).unwrap()).unwrap();
        let class = codec.split_and_classify(&frags);
        let strings = codec.redundancy_strings(&class.r).unwrap();
        assert_eq!(strings.keys().copied().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn round_trips_under_every_strategy() {
        for (m, t) in [(256u64, 1u64), (256, 2), (1024, 3), (1 << 14, 2)] {
            for seed in 0..6 {
                let (codec, z, enc) = setup(m, t, seed);
                let ctx = AttackContext::new(&enc.codeword, &codec);
                for name in ["uniform", "signature-target", "marker-target", "boundary-target"] {
                    let pattern = attack(name, &ctx, seed * 31 + 7).unwrap();
                    let frags = break_at(&enc.codeword, &pattern).unwrap();
                    let (out, _) = codec
                        .decode_detailed(&frags, Some(&enc.y))
                        .unwrap_or_else(|e| panic!("m={m} t={t} seed={seed} {name} {pattern}: {e}"));
                    assert_eq!(out, z);
                    let dropped = drop_short(&frags, codec.params().l(), codec.params().l()).unwrap();
                    assert_eq!(codec.decode_detailed(&dropped, Some(&enc.y)).unwrap().0, z);
                }
            }
        }
    }

    #[test]
    fn fragment_order_is_irrelevant() {
        let (codec, z, enc) = setup(1024, 3, 9);
        let ctx = AttackContext::new(&enc.codeword, &codec);
        let pattern = attack("uniform", &ctx, 3).unwrap();
        let mut frags = crate::channel::break_ordered(&enc.codeword, &pattern);
        let mut rng = seeded_rng(1);
        for _ in 0..5 {
            frags.shuffle(&mut rng);
            assert_eq!(codec.decode(&FragmentMultiset::new(frags.clone())).unwrap(), z);
        }
    }

    #[test]
    fn too_many_breaks_are_reported() {
        let (codec, z, enc) = setup(1 << 14, 1, 10);
        let start = codec.params().info_start();
        let sigs: Vec<usize> = enc.level0.keys().copied().collect();
        let mut failures = 0;
        for k in 0..10 {
            // five cuts in consecutive level-0 signatures, far beyond t = 1
            let cuts: Vec<usize> = sigs[1 + k..6 + k].iter().map(|&s| start + s + 3).collect();
            match decode_pattern(&codec, &enc, cuts) {
                Ok((out, _)) => assert_eq!(out, z),
                Err(DecodeError::BudgetExceeded { .. }) | Err(DecodeError::Unresolved(_)) => failures += 1,
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(failures > 0);
    }
}
