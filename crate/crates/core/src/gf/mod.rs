//! Binary extension fields GF(2^w) for even `w` in `[8, 128]`.
//!
//! Elements are `u128` coefficient vectors (bit `i` is the coefficient of
//! `x^i`). Multiplication is a carry-less product (PCLMULQDQ when the CPU
//! has it) reduced modulo the least irreducible polynomial of degree `w`,
//! taken from a built-in table and re-verified at construction.

mod numtheory;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use numtheory::{factorize_group_order, inv_mod_prime_power, mul_mod};

pub const MIN_WIDTH: u32 = 8;
pub const MAX_WIDTH: u32 = 128;

/// Least irreducible `x^w + low` for every even `w`, keyed by `w`; the
/// value is `low` (the polynomial without its leading term).
const REDUCTION_TABLE: [(u32, u128); 61] = [
    (8, 0x1b),
    (10, 0x9),
    (12, 0x9),
    (14, 0x21),
    (16, 0x2b),
    (18, 0x9),
    (20, 0x9),
    (22, 0x3),
    (24, 0x1b),
    (26, 0x1b),
    (28, 0x3),
    (30, 0x3),
    (32, 0x8d),
    (34, 0x1b),
    (36, 0x35),
    (38, 0x63),
    (40, 0x39),
    (42, 0x27),
    (44, 0x21),
    (46, 0x3),
    (48, 0x2d),
    (50, 0x1d),
    (52, 0x9),
    (54, 0x7d),
    (56, 0x95),
    (58, 0x63),
    (60, 0x3),
    (62, 0x69),
    (64, 0x1b),
    (66, 0x9),
    (68, 0xa3),
    (70, 0x2b),
    (72, 0x5f),
    (74, 0x47),
    (76, 0x35),
    (78, 0x5f),
    (80, 0xaf),
    (82, 0xd7),
    (84, 0x21),
    (86, 0x65),
    (88, 0x3f),
    (90, 0x2d),
    (92, 0x65),
    (94, 0x63),
    (96, 0x6f),
    (98, 0x99),
    (100, 0x65),
    (102, 0x69),
    (104, 0x1b),
    (106, 0x63),
    (108, 0x53),
    (110, 0x53),
    (112, 0x39),
    (114, 0x2d),
    (116, 0x17),
    (118, 0x65),
    (120, 0x1b),
    (122, 0x47),
    (124, 0x7d),
    (126, 0x95),
    (128, 0x87),
];

/// Subgroups up to this prime order are searched with baby-step giant-step;
/// larger ones with Pollard's rho for logarithms.
const BSGS_LIMIT: u128 = 1 << 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("unsupported extension degree {0}; expected an even value in [{MIN_WIDTH}, {MAX_WIDTH}]")]
    UnsupportedWidth(u32),
    #[error("x^{width} + {low:#x} is not irreducible")]
    Reducible { width: u32, low: u128 },
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("operand from GF(2^{got}) used in GF(2^{expected})")]
    MixedFields { expected: u32, got: u32 },
    #[error("value {value:#x} does not fit in GF(2^{width})")]
    OutOfField { value: u128, width: u32 },
}

/// An element tagged with the width of its field, for checked arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub value: u128,
    pub width: u32,
}

#[derive(Debug)]
struct GroupInfo {
    order: u128,
    factors: Vec<(u128, u32)>,
    generator: u128,
    generator_inv: u128,
}

/// GF(2^w) with a fixed reduction polynomial.
#[derive(Debug)]
pub struct Gf {
    width: u32,
    low: u128,
    mask: u128,
    group: OnceLock<GroupInfo>,
}

impl Gf {
    /// The field of degree `width` with the built-in reduction polynomial.
    pub fn new(width: u32) -> Result<Self, GfError> {
        let low = REDUCTION_TABLE
            .iter()
            .find(|(w, _)| *w == width)
            .map(|&(_, low)| low)
            .ok_or(GfError::UnsupportedWidth(width))?;
        Self::with_reduction(width, low)
    }

    /// Shared instance of the built-in field of degree `width`.
    pub fn standard(width: u32) -> Result<Arc<Self>, GfError> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Gf>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(gf) = cache.lock().unwrap().get(&width) {
            return Ok(gf.clone());
        }
        let gf = Arc::new(Self::new(width)?);
        Ok(cache.lock().unwrap().entry(width).or_insert(gf).clone())
    }

    /// A field with an explicit reduction polynomial `x^width + low`.
    pub fn with_reduction(width: u32, low: u128) -> Result<Self, GfError> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) || !width.is_multiple_of(2) {
            return Err(GfError::UnsupportedWidth(width));
        }
        let mask = if width == 128 {
            u128::MAX
        } else {
            (1u128 << width) - 1
        };
        if low > mask {
            return Err(GfError::Reducible { width, low });
        }
        let gf = Self {
            width,
            low,
            mask,
            group: OnceLock::new(),
        };
        if !gf.reduction_is_irreducible() {
            return Err(GfError::Reducible { width, low });
        }
        Ok(gf)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Low part of the reduction polynomial (the leading `x^w` is implicit).
    pub fn reduction_low(&self) -> u128 {
        self.low
    }

    /// Size of the multiplicative group, `2^w - 1`.
    pub fn order(&self) -> u128 {
        self.mask
    }

    pub fn contains(&self, a: u128) -> bool {
        a & !self.mask == 0
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        if self.width <= 64 {
            self.reduce_narrow(clmul64(a as u64, b as u64))
        } else {
            self.reduce_wide(clmul128(a, b))
        }
    }

    /// Reduces a product of two elements of a field of width at most 64.
    #[inline]
    fn reduce_narrow(&self, mut p: u128) -> u128 {
        loop {
            let high = p >> self.width;
            if high == 0 {
                return p;
            }
            // x^w = low, and high < 2^63 so the fold fits one carry-less product
            p = (p & self.mask) ^ clmul64(high as u64, self.low as u64);
        }
    }

    /// Reduces a 256-bit product `(hi, lo)` for widths above 64.
    fn reduce_wide(&self, (mut hi, mut lo): (u128, u128)) -> u128 {
        let w = self.width;
        loop {
            let high = if w == 128 { hi } else { (hi << (128 - w)) | (lo >> w) };
            if high == 0 {
                return lo;
            }
            let (fold_hi, fold_lo) = clmul128(high, self.low);
            hi = fold_hi;
            lo = (lo & self.mask) ^ fold_lo;
        }
    }

    #[inline]
    pub fn square(&self, a: u128) -> u128 {
        self.mul(a, a)
    }

    pub fn pow(&self, mut base: u128, mut exp: u128) -> u128 {
        let mut r = 1u128;
        while exp > 0 {
            if exp & 1 == 1 {
                r = self.mul(r, base);
            }
            exp >>= 1;
            if exp > 0 {
                base = self.square(base);
            }
        }
        r
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u128) -> Option<u128> {
        if a == 0 {
            return None;
        }
        Some(self.pow(a, self.mask - 1))
    }

    pub fn div(&self, a: u128, b: u128) -> Option<u128> {
        Some(self.mul(a, self.inv(b)?))
    }

    pub fn element(&self, value: u128) -> Result<FieldElement, GfError> {
        if !self.contains(value) {
            return Err(GfError::OutOfField {
                value,
                width: self.width,
            });
        }
        Ok(FieldElement {
            value,
            width: self.width,
        })
    }

    fn check(&self, a: FieldElement) -> Result<u128, GfError> {
        if a.width != self.width {
            return Err(GfError::MixedFields {
                expected: self.width,
                got: a.width,
            });
        }
        self.element(a.value).map(|e| e.value)
    }

    pub fn checked_add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        let v = self.add(self.check(a)?, self.check(b)?);
        self.element(v)
    }

    pub fn checked_mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        let v = self.mul(self.check(a)?, self.check(b)?);
        self.element(v)
    }

    pub fn checked_inv(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        let v = self.inv(self.check(a)?).ok_or(GfError::InverseOfZero)?;
        self.element(v)
    }

    pub fn checked_pow(&self, a: FieldElement, exp: u128) -> Result<FieldElement, GfError> {
        let v = self.pow(self.check(a)?, exp);
        self.element(v)
    }

    /// Rabin's test on the reduction polynomial.
    fn reduction_is_irreducible(&self) -> bool {
        let w = self.width;
        let x = 2u128;
        // powers[i] = x^(2^i) mod f
        let mut powers = Vec::with_capacity(w as usize + 1);
        let mut h = x;
        powers.push(h);
        for _ in 0..w {
            h = self.square(h);
            powers.push(h);
        }
        if powers[w as usize] != x {
            return false;
        }
        prime_divisors(w).into_iter().all(|p| {
            let g = powers[(w / p) as usize] ^ x;
            g != 0 && poly2_gcd_with_modulus(g, w, self.low) == 1
        })
    }

    fn group(&self) -> &GroupInfo {
        self.group.get_or_init(|| {
            let order = self.order();
            let factors = factorize_group_order(self.width);
            let generator = (2..)
                .find(|&g| {
                    factors
                        .iter()
                        .all(|&(p, _)| self.pow(g, order / p) != 1)
                })
                .expect("a finite field always has a primitive element");
            let generator_inv = self.inv(generator).expect("generator is nonzero");
            GroupInfo {
                order,
                factors,
                generator,
                generator_inv,
            }
        })
    }

    /// The smallest-valued primitive element, used as the Reed-Solomon root
    /// base.
    pub fn primitive_element(&self) -> u128 {
        self.group().generator
    }

    /// `alpha^e` for the canonical primitive element `alpha`.
    pub fn exp(&self, e: u128) -> u128 {
        self.pow(self.primitive_element(), e % self.order())
    }

    /// Discrete logarithm to the base of the primitive element
    /// (Pohlig-Hellman over the factorisation of `2^w - 1`).
    pub fn log(&self, h: u128) -> Option<u128> {
        if h == 0 || !self.contains(h) {
            return None;
        }
        let group = self.group();
        let n = group.order;
        let mut residues = Vec::with_capacity(group.factors.len());
        for &(p, e) in &group.factors {
            let gamma = self.pow(group.generator, n / p);
            let mut x = 0u128;
            let mut p_k = 1u128;
            for k in 0..e {
                let shifted = self.mul(self.pow(group.generator_inv, x), h);
                let c = self.pow(shifted, n / (p_k * p));
                let digit = self.log_prime_order(gamma, c, p)?;
                x += digit * p_k;
                if k + 1 < e {
                    p_k *= p;
                }
            }
            residues.push((x, p, e));
        }
        let mut x = 0u128;
        for (r, p, e) in residues {
            let pe = p.pow(e);
            let cofactor = n / pe;
            let inv = inv_mod_prime_power(cofactor % pe, p, e);
            let term = mul_mod(mul_mod(r, cofactor, n), inv, n);
            x = numtheory::add_mod(x, term, n);
        }
        Some(x)
    }

    /// Log of `c` to base `gamma`, where `gamma` has prime order `p`.
    fn log_prime_order(&self, gamma: u128, c: u128, p: u128) -> Option<u128> {
        if c == 1 {
            return Some(0);
        }
        if p <= BSGS_LIMIT {
            self.log_bsgs(gamma, c, p)
        } else {
            self.log_rho(gamma, c, p)
        }
    }

    fn log_bsgs(&self, gamma: u128, c: u128, p: u128) -> Option<u128> {
        let m = (p as f64).sqrt().ceil() as u128 + 1;
        let mut baby = HashMap::with_capacity(m as usize);
        let mut cur = 1u128;
        for j in 0..m {
            baby.entry(cur).or_insert(j);
            cur = self.mul(cur, gamma);
        }
        // gamma^(-m)
        let giant = self.pow(self.inv(gamma)?, m);
        let mut y = c;
        for i in 0..m {
            if let Some(&j) = baby.get(&y) {
                return Some((i * m + j) % p);
            }
            y = self.mul(y, giant);
        }
        None
    }

    fn log_rho(&self, gamma: u128, c: u128, p: u128) -> Option<u128> {
        // Walk x = gamma^a * c^b with a three-way partition; Floyd cycle finding.
        let step = |x: u128, a: u128, b: u128| -> (u128, u128, u128) {
            match x % 3 {
                0 => (self.mul(x, gamma), (a + 1) % p, b),
                1 => (self.square(x), mul_mod(a, 2, p), mul_mod(b, 2, p)),
                _ => (self.mul(x, c), a, (b + 1) % p),
            }
        };
        for start in 1u128..64 {
            let (a0, b0) = (start % p, (start * 7 + 3) % p);
            let x0 = self.mul(self.pow(gamma, a0), self.pow(c, b0));
            let (mut x, mut a, mut b) = (x0, a0, b0);
            let (mut x2, mut a2, mut b2) = (x0, a0, b0);
            let limit = 16 * ((p as f64).sqrt() as u128 + 1);
            for _ in 0..limit {
                (x, a, b) = step(x, a, b);
                (x2, a2, b2) = step(x2, a2, b2);
                (x2, a2, b2) = step(x2, a2, b2);
                if x == x2 {
                    let db = (b2 + p - b) % p;
                    if db == 0 {
                        break;
                    }
                    let da = (a + p - a2) % p;
                    let inv = numtheory::pow_mod(db, p - 2, p);
                    let cand = mul_mod(da, inv, p);
                    if self.pow(gamma, cand) == c {
                        return Some(cand);
                    }
                    break;
                }
            }
        }
        None
    }
}

fn prime_divisors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn deg2(a: u128) -> i32 {
    127 - a.leading_zeros() as i32
}

fn poly2_mod(mut a: u128, b: u128) -> u128 {
    let db = deg2(b);
    while a != 0 && deg2(a) >= db {
        a ^= b << (deg2(a) - db);
    }
    a
}

/// gcd over GF(2)[x] of `g` (degree < w) and `x^w + low`.
fn poly2_gcd_with_modulus(g: u128, w: u32, low: u128) -> u128 {
    // f mod g without materialising the degree-w term.
    let dg = deg2(g);
    let mut xw = 1u128 << dg ^ g; // x^dg mod g
    for _ in dg as u32..w {
        xw <<= 1;
        if (xw >> dg) & 1 == 1 {
            xw ^= g;
        }
    }
    let mut a = g;
    let mut b = xw ^ poly2_mod(low, g);
    while b != 0 {
        (a, b) = (b, poly2_mod(a, b));
    }
    a
}

/// Carry-less product of two 64-bit polynomials.
#[inline]
fn clmul64(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the instruction set extension was detected at runtime.
            return unsafe { clmul64_pclmul(a, b) };
        }
    }
    clmul64_soft(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq")]
unsafe fn clmul64_pclmul(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::{__m128i, _mm_clmulepi64_si128, _mm_set_epi64x};
    let r = _mm_clmulepi64_si128::<0>(_mm_set_epi64x(0, a as i64), _mm_set_epi64x(0, b as i64));
    std::mem::transmute::<__m128i, u128>(r)
}

/// Portable carry-less product, four bits of `b` at a time.
fn clmul64_soft(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut table = [0u128; 16];
    for (i, entry) in table.iter_mut().enumerate() {
        *entry = (0..4).filter(|k| (i >> k) & 1 == 1).fold(0, |acc, k| acc ^ (a << k));
    }
    let mut r = 0u128;
    for nibble in (0..16).rev() {
        r = (r << 4) ^ table[((b >> (4 * nibble)) & 0xf) as usize];
    }
    r
}

/// Carry-less product of two 128-bit polynomials as `(high, low)` halves.
fn clmul128(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = ((a >> 64) as u64, a as u64);
    let (b1, b0) = ((b >> 64) as u64, b as u64);
    let lo = clmul64(a0, b0);
    let mid = clmul64(a0, b1) ^ clmul64(a1, b0);
    let hi = clmul64(a1, b1);
    (hi ^ (mid >> 64), lo ^ (mid << 64))
}
