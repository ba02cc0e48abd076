//! The encoder: signatures, adjacency matrix, signature levels, residuals,
//! Reed-Solomon redundancy and marker instrumentation.
//!
//! Positions are 0-based offsets into the information region
//! `y = m_0 ∘ z` of length `m + L`; `m_0` sits at position 0 and the end
//! sentinel is `m + L`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bits::{bits_to_u128, BitString};
use crate::legit::{check_legit, LegitError, Violation};
use crate::mu::MuCode;
use crate::params::Params;
use crate::rs::{RsCode, RsError, SparseMessage};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Legit(#[from] LegitError),
    #[error("input is not legit: {0}")]
    NotLegit(Violation),
    #[error("signature value {0:#x} occurs twice")]
    DuplicateSignature(u64),
    #[error("value {0:#x} is not a codeword of the MU code")]
    NotACodeword(u64),
    #[error("malformed adjacency row: column {column} with zero weight")]
    MalformedRow { column: u64 },
    #[error("residual of {len} bits does not fit in an {l}-bit symbol")]
    ResidualTooLong { len: usize, l: usize },
    #[error("padded value has no terminating 1")]
    BadPadding,
    #[error(transparent)]
    Rs(#[from] RsError),
}

/// Parameters plus the MU code and its reserved markers.
#[derive(Debug, Clone)]
pub struct Codec {
    params: Params,
    code: MuCode,
}

impl Codec {
    pub fn new(params: Params) -> Self {
        let code = MuCode::new(params.l()).expect("parameters validate the signature length");
        Self { params, code }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn mu(&self) -> &MuCode {
        &self.code
    }

    /// Marker `m_l` as an `L`-bit word.
    pub fn marker_word(&self, l: u64) -> u64 {
        self.code.unrank_word(l).expect("params guarantee t + 2 codewords")
    }

    pub fn marker(&self, l: u64) -> BitString {
        BitString::from_u128(self.marker_word(l) as u128, self.params.l())
    }

    pub fn info_len(&self) -> usize {
        self.params.info_len() as usize
    }

    pub fn encode(&self, z: &BitString) -> Result<BitString, EncodeError> {
        Ok(self.encode_detailed(z)?.codeword)
    }

    pub fn encode_detailed(&self, z: &BitString) -> Result<Encoding, EncodeError> {
        if let Some(v) = check_legit(z, &self.params, &self.code)?.violation {
            return Err(EncodeError::NotLegit(v));
        }
        let p = &self.params;
        let l = p.l();
        let t = p.t as usize;
        let y = BitString::concat(&[&self.marker(0), z]);
        let end = y.len();

        let level0: SignatureStore = self
            .code
            .scan(y.as_slice())
            .into_iter()
            .map(|(pos, _)| (pos, y.read_u128(pos, l) as u64))
            .collect();
        let adjacency = build_adjacency(&level0, &self.code)?;
        let (levels, residuals) = grow_levels(&level0, y.as_slice(), p)?;

        let mut redundancy = vec![BitString::zeros(p.u_len as usize).into_inner(); t];
        let mut put = |parities: &[u128], per_string: usize, width: usize, offset: &dyn Fn(usize) -> usize| {
            for (i, &v) in parities.iter().enumerate() {
                let (string, slot) = (i / per_string, i % per_string);
                let at = offset(slot);
                let bits = BitString::from_u128(v, width);
                redundancy[string][at..at + width].copy_from_slice(bits.as_slice());
            }
        };

        let adj_code = RsCode::new(p.field_adj(), p.mu_size, p.adjacency_parity_count())?;
        let adj_parity = adj_code.encode(&adjacency.to_message(p))?;
        put(&adj_parity, 4, 2 * l, &|j| p.adjacency_offset(j));

        for (idx, store) in levels.iter().enumerate() {
            let level = idx + 1;
            let msg = SparseMessage::from_dense(&store.values().map(|&v| v as u128).collect::<Vec<_>>());
            let code = RsCode::new(p.field_sig(), msg.msg_len(), p.level_parity_count())?;
            put(&code.encode(&msg)?, 2, l, &|j| p.level_offset(level, j));
        }

        let msg = SparseMessage::from_dense(&residuals.values().map(|&v| v as u128).collect::<Vec<_>>());
        let res_code = RsCode::new(p.field_sig(), msg.msg_len(), p.residual_parity_count())?;
        put(&res_code.encode(&msg)?, 3, l, &|j| p.residual_offset(j));

        let redundancy: Vec<BitString> = redundancy.into_iter().map(BitString::from).collect();
        let mut codeword = BitString::new();
        for (i, u) in redundancy.iter().enumerate().rev() {
            codeword.extend_from(&self.instrument(i as u64 + 1, u));
        }
        codeword.extend_from(&y);
        debug_assert_eq!(codeword.len() as u64, p.n);
        debug_assert_eq!(end as u64, p.info_len());

        Ok(Encoding {
            codeword,
            y,
            level0,
            adjacency,
            levels,
            residuals,
            redundancy,
        })
    }

    /// `m_l ∘ chunk_1 ∘ m_l ∘ chunk_2 ∘ ...` with `L/2`-bit chunks and no trailing marker.
    pub fn instrument(&self, l: u64, u: &BitString) -> BitString {
        let marker = self.marker(l);
        let chunk = self.params.chunk_len();
        let mut out = BitString::new();
        for piece in u.as_slice().chunks(chunk) {
            out.extend_from(&marker);
            out.extend_from_slice(piece);
        }
        out
    }
}

/// Everything the encoder computed, for inspection and test harnesses.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub codeword: BitString,
    /// The information region `m_0 ∘ z`.
    pub y: BitString,
    pub level0: SignatureStore,
    pub adjacency: AdjacencyMatrix,
    /// Signature store after each level `1..=num_levels`.
    pub levels: Vec<SignatureStore>,
    pub residuals: ResidualStore,
    /// Redundancy strings `u_1..u_t` before instrumentation.
    pub redundancy: Vec<BitString>,
}

/// Position to `L`-bit signature value.
pub type SignatureStore = BTreeMap<usize, u64>;

/// Position of a residual's first bit to its padded `L`-bit value.
pub type ResidualStore = BTreeMap<usize, u64>;

/// Sparse successor map: row `a` holds `(b, start distance)` when codeword
/// `b` is the signature following codeword `a`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    rows: BTreeMap<u64, (u64, u64)>,
}

impl AdjacencyMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets a row, returning the previous content.
    pub fn insert(&mut self, a: u64, b: u64, weight: u64) -> Option<(u64, u64)> {
        self.rows.insert(a, (b, weight))
    }

    pub fn get(&self, a: u64) -> Option<(u64, u64)> {
        self.rows.get(&a).copied()
    }

    pub fn rows(&self) -> impl Iterator<Item = (u64, (u64, u64))> + '_ {
        self.rows.iter().map(|(&a, &r)| (a, r))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The compressed rows as a Reed-Solomon message of length `mu_size`.
    pub fn to_message(&self, params: &Params) -> SparseMessage {
        let l = params.l();
        SparseMessage::from_entries(
            params.mu_size,
            self.rows.iter().map(|(&a, &row)| (a, compress_row(Some(row), l))),
        )
        .expect("rows are MU indices in ascending order")
    }

    pub fn from_message(msg: &SparseMessage, l: usize) -> Result<Self, EncodeError> {
        let mut rows = BTreeMap::new();
        for &(a, e) in msg.entries() {
            if let Some(row) = decompress_row(e, l)? {
                rows.insert(a, row);
            }
        }
        Ok(Self { rows })
    }

    /// Follows successors from row `start`, returning `(codeword index,
    /// position)` pairs beginning with `(start, 0)`. Stops at an empty row
    /// or on revisiting a row.
    pub fn walk(&self, start: u64) -> Vec<(u64, usize)> {
        let mut out = vec![(start, 0usize)];
        let mut seen = std::collections::HashSet::from([start]);
        let mut cursor = 0usize;
        let mut a = start;
        while let Some((b, w)) = self.get(a) {
            if !seen.insert(b) {
                break;
            }
            cursor += w as usize;
            out.push((b, cursor));
            a = b;
        }
        out
    }
}

pub fn build_adjacency(sigs: &SignatureStore, code: &MuCode) -> Result<AdjacencyMatrix, EncodeError> {
    let mut adj = AdjacencyMatrix::new();
    let ranks: Vec<(usize, u64)> = sigs
        .iter()
        .map(|(&pos, &v)| code.rank_word(v).map(|r| (pos, r)).ok_or(EncodeError::NotACodeword(v)))
        .collect::<Result<_, _>>()?;
    let mut seen = std::collections::HashSet::new();
    for &(_, r) in &ranks {
        if !seen.insert(r) {
            return Err(EncodeError::DuplicateSignature(code.unrank_word(r).expect("rank is valid")));
        }
    }
    for pair in ranks.windows(2) {
        let ((k, a), (k_next, b)) = (pair[0], pair[1]);
        adj.insert(a, b, (k_next - k) as u64);
    }
    Ok(adj)
}

/// Packs a row as `b * 2^L + weight`; the empty row is 0.
pub fn compress_row(row: Option<(u64, u64)>, l: usize) -> u128 {
    match row {
        None => 0,
        Some((b, weight)) => {
            debug_assert!(weight > 0 && (weight as u128) < 1u128 << l && (b as u128) < 1u128 << l);
            ((b as u128) << l) | weight as u128
        }
    }
}

pub fn decompress_row(e: u128, l: usize) -> Result<Option<(u64, u64)>, EncodeError> {
    if e == 0 {
        return Ok(None);
    }
    let b = (e >> l) as u64;
    let weight = (e & ((1u128 << l) - 1)) as u64;
    if weight == 0 {
        return Err(EncodeError::MalformedRow { column: b });
    }
    Ok(Some((b, weight)))
}

/// Appends a 1 and then zeros up to `L` bits, returned as an `L`-bit value.
pub fn pad(s: &[u8], l: usize) -> Result<u64, EncodeError> {
    if s.len() >= l {
        return Err(EncodeError::ResidualTooLong { len: s.len(), l });
    }
    let head = bits_to_u128(s) as u64;
    Ok(((head << 1) | 1) << (l - s.len() - 1))
}

/// Strips the trailing zeros and the final 1 of an `L`-bit padded value.
pub fn depad(value: u64, l: usize) -> Result<BitString, EncodeError> {
    if value == 0 || (l < 64 && value >> l != 0) {
        return Err(EncodeError::BadPadding);
    }
    let len = l - 1 - value.trailing_zeros() as usize;
    Ok(BitString::from_u128((value >> (l - len)) as u128, len))
}

/// Midpoints of consecutive keys (and the end sentinel) at least `2L` apart.
pub fn next_level_positions(keys: &[usize], end: usize, l: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, &k) in keys.iter().enumerate() {
        let next = keys.get(i + 1).copied().unwrap_or(end);
        if next - k >= 2 * l {
            out.push((k + next) / 2);
        }
    }
    out
}

/// `(key, length)` of every residual: the bits between consecutive
/// signatures (or the last signature and the end) that are more than `L`
/// but less than `2L` apart start to start. `None` if some spacing falls
/// outside `[L, 2L)`.
pub fn residual_spans(keys: &[usize], end: usize, l: usize) -> Option<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (i, &k) in keys.iter().enumerate() {
        let next = keys.get(i + 1).copied().unwrap_or(end);
        let d = next.checked_sub(k)?;
        if d < l || d >= 2 * l {
            return None;
        }
        if d > l {
            out.push((k + l, d - l));
        }
    }
    Some(out)
}

/// Adds `num_levels` levels of midpoint signatures, returning the store
/// after each level and the residuals of the final store.
pub fn grow_levels(
    level0: &SignatureStore,
    y: &[u8],
    params: &Params,
) -> Result<(Vec<SignatureStore>, ResidualStore), EncodeError> {
    let l = params.l();
    let end = y.len();
    let mut store = level0.clone();
    let mut levels = Vec::with_capacity(params.num_levels as usize);
    for _ in 0..params.num_levels {
        let keys: Vec<usize> = store.keys().copied().collect();
        for u in next_level_positions(&keys, end, l) {
            store.insert(u, bits_to_u128(&y[u..u + l]) as u64);
        }
        levels.push(store.clone());
    }
    let keys: Vec<usize> = store.keys().copied().collect();
    let mut residuals = ResidualStore::new();
    let spans = residual_spans(&keys, end, l).expect("num_levels halvings bring every spacing below 2L");
    for (key, len) in spans {
        residuals.insert(key, pad(&y[key..key + len], l)?);
    }
    Ok((levels, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legit::sample_legit;

    fn codec(m: u64, t: u64) -> Codec {
        Codec::new(Params::derive(m, t, 3).unwrap())
    }

    #[test]
    fn adjacency_of_figure_shape() {
        // c4, c1, c3, c2 with gaps of 6, 4 and 5 bits between 24-bit signatures
        let code = MuCode::new(24).unwrap();
        let w = |i| code.unrank_word(i).unwrap();
        let sigs: SignatureStore = [(0, w(4)), (30, w(1)), (58, w(3)), (87, w(2))].into_iter().collect();
        let adj = build_adjacency(&sigs, &code).unwrap();
        let rows: Vec<_> = adj.rows().collect();
        assert_eq!(rows, vec![(1, (3, 28)), (3, (2, 29)), (4, (1, 30))]);
        assert_eq!(adj.walk(4), vec![(4, 0), (1, 30), (3, 58), (2, 87)]);

        let single: SignatureStore = [(5, w(9))].into_iter().collect();
        assert!(build_adjacency(&single, &code).unwrap().is_empty());
        let dup: SignatureStore = [(0, w(9)), (40, w(9))].into_iter().collect();
        assert_eq!(build_adjacency(&dup, &code), Err(EncodeError::DuplicateSignature(w(9))));
    }

    #[test]
    fn row_compression() {
        assert_eq!(compress_row(None, 8), 0);
        assert_eq!(compress_row(Some((3, 12)), 8), 0x030C);
        assert_eq!(compress_row(Some((3, 12)), 8), 780);
        for b in 0..64u64 {
            for w in 1..64u64 {
                assert_eq!(decompress_row(compress_row(Some((b, w)), 8), 8).unwrap(), Some((b, w)));
            }
        }
        assert_eq!(decompress_row(0, 8).unwrap(), None);
        assert_eq!(decompress_row(0x0300, 8), Err(EncodeError::MalformedRow { column: 3 }));
    }

    #[test]
    fn padding() {
        let s: BitString = "101".parse().unwrap();
        let p = pad(s.as_slice(), 8).unwrap();
        assert_eq!(BitString::from_u128(p as u128, 8).to_string(), "10110000");
        assert_eq!(depad(p, 8).unwrap(), s);
        assert_eq!(BitString::from_u128(pad(&[], 8).unwrap() as u128, 8).to_string(), "10000000");
        assert_eq!(depad(0x80, 8).unwrap(), BitString::new());
        for len in 0..8 {
            for v in 0..1u128 << len {
                let s = BitString::from_u128(v, len);
                assert_eq!(depad(pad(s.as_slice(), 8).unwrap(), 8).unwrap(), s);
            }
        }
        assert_eq!(depad(0, 8), Err(EncodeError::BadPadding));
        assert!(pad(&[0; 8], 8).is_err());
    }

    #[test]
    fn level_and_residual_boundaries() {
        let l = 24;
        assert_eq!(next_level_positions(&[0, 48], 72, l), vec![24]);
        assert_eq!(next_level_positions(&[0, 47], 71, l), Vec::<usize>::new());
        assert_eq!(residual_spans(&[0, 29], 53, l), Some(vec![(24, 5)]));
        assert_eq!(residual_spans(&[0, 24], 48, l), Some(vec![]));
        assert_eq!(residual_spans(&[0, 48], 72, l), None);
    }

    #[test]
    fn codeword_layout() {
        let c = codec(256, 2);
        let (z, _) = sample_legit(c.params(), c.mu(), 7).unwrap();
        let enc = c.encode_detailed(&z).unwrap();
        assert_eq!(enc.codeword.len(), 4456);
        let start = c.params().info_start();
        assert_eq!(enc.codeword.slice(start..start + 24), c.marker(0));
        assert_eq!(enc.codeword.slice(start + 24..4456), z);
        // u_2 is instrumented first, u_1 last
        let inst = c.params().instrumented_len();
        assert_eq!(enc.codeword.slice(0..24), c.marker(2));
        assert_eq!(enc.codeword.slice(inst..inst + 24), c.marker(1));
        assert_eq!(enc.codeword.slice(0..inst), c.instrument(2, &enc.redundancy[1]));
    }

    #[test]
    fn signatures_and_residuals_tile_the_information_region() {
        for (m, seed) in [(256u64, 1u64), (1024, 2), (1 << 14, 3)] {
            let c = codec(m, 2);
            let l = c.params().l();
            let (z, _) = sample_legit(c.params(), c.mu(), seed).unwrap();
            let enc = c.encode_detailed(&z).unwrap();
            let last = enc.levels.last().unwrap();
            let mut covered = vec![0u8; enc.y.len()];
            let mut rebuilt = vec![2u8; enc.y.len()];
            for (&k, &v) in last {
                assert_eq!(v, enc.y.read_u128(k, l) as u64);
                for (i, &b) in BitString::from_u128(v as u128, l).as_slice().iter().enumerate() {
                    covered[k + i] += 1;
                    rebuilt[k + i] = b;
                }
            }
            for (&k, &v) in &enc.residuals {
                let r = depad(v, l).unwrap();
                for (i, &b) in r.as_slice().iter().enumerate() {
                    covered[k + i] += 1;
                    rebuilt[k + i] = b;
                }
            }
            assert!(covered.iter().all(|&c| c == 1), "m={m}");
            assert_eq!(BitString::from(rebuilt), enc.y);
            let keys: Vec<usize> = last.keys().copied().collect();
            for (i, &k) in keys.iter().enumerate() {
                let d = keys.get(i + 1).copied().unwrap_or(enc.y.len()) - k;
                assert!(d >= l && d < 2 * l);
            }
        }
    }

    #[test]
    fn markers_only_where_instrumented() {
        let c = codec(1024, 3);
        let (z, _) = sample_legit(c.params(), c.mu(), 4).unwrap();
        let enc = c.encode_detailed(&z).unwrap();
        let p = c.params();
        let per = p.chunk_count();
        let stride = p.l() + p.chunk_len();
        for (pos, idx) in c.mu().scan(enc.codeword.as_slice()) {
            if pos >= p.info_start() {
                assert!(idx > p.t || pos == p.info_start());
                continue;
            }
            let string = pos / p.instrumented_len();
            let within = pos % p.instrumented_len();
            assert_eq!(within % stride, 0);
            assert!(within / stride < per);
            assert_eq!(idx, p.t - string as u64);
        }
    }

    #[test]
    fn rejects_non_legit_input() {
        let c = codec(256, 2);
        let (z, _) = sample_legit(c.params(), c.mu(), 1).unwrap();
        let mut bits = z.into_inner();
        bits[10..34].copy_from_slice(c.marker(1).as_slice());
        assert!(matches!(
            c.encode(&BitString::from(bits)),
            Err(EncodeError::NotLegit(_))
        ));
    }
}
