//! Dense polynomials over GF(2^w), coefficients lowest degree first.

use crate::gf::Gf;

pub(crate) type Poly = Vec<u128>;

pub(crate) fn trim(p: &mut Poly) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

/// Degree, or `None` for the zero polynomial.
pub(crate) fn degree(p: &[u128]) -> Option<usize> {
    p.iter().rposition(|&c| c != 0)
}

pub(crate) fn add(a: &[u128], b: &[u128]) -> Poly {
    let mut out = vec![0; a.len().max(b.len())];
    for (i, &c) in a.iter().enumerate() {
        out[i] ^= c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[i] ^= c;
    }
    trim(&mut out);
    out
}

pub(crate) fn mul(gf: &Gf, a: &[u128], b: &[u128]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] ^= gf.mul(x, y);
        }
    }
    trim(&mut out);
    out
}

pub(crate) fn scale(gf: &Gf, a: &[u128], k: u128) -> Poly {
    let mut out: Poly = a.iter().map(|&c| gf.mul(c, k)).collect();
    trim(&mut out);
    out
}

/// Quotient and remainder; `m` must be nonzero.
pub(crate) fn div_rem(gf: &Gf, a: &[u128], m: &[u128]) -> (Poly, Poly) {
    let dm = degree(m).expect("division by the zero polynomial");
    let lead_inv = gf.inv(m[dm]).expect("leading coefficient is nonzero");
    let mut r: Poly = a.to_vec();
    trim(&mut r);
    if r.len() <= dm {
        return (Vec::new(), r);
    }
    let mut q = vec![0; r.len() - dm];
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        let coef = gf.mul(r[dr], lead_inv);
        let shift = dr - dm;
        q[shift] = coef;
        for (i, &c) in m[..=dm].iter().enumerate() {
            r[shift + i] ^= gf.mul(coef, c);
        }
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

pub(crate) fn rem(gf: &Gf, a: &[u128], m: &[u128]) -> Poly {
    div_rem(gf, a, m).1
}

pub(crate) fn mul_mod(gf: &Gf, a: &[u128], b: &[u128], m: &[u128]) -> Poly {
    rem(gf, &mul(gf, a, b), m)
}

pub(crate) fn monic(gf: &Gf, a: &[u128]) -> Poly {
    match degree(a) {
        None => Vec::new(),
        Some(d) => scale(gf, &a[..=d], gf.inv(a[d]).expect("nonzero lead")),
    }
}

/// Monic greatest common divisor.
pub(crate) fn gcd(gf: &Gf, a: &[u128], b: &[u128]) -> Poly {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = rem(gf, &a, &b);
        a = b;
        b = r;
    }
    monic(gf, &a)
}

pub(crate) fn eval(gf: &Gf, p: &[u128], x: u128) -> u128 {
    p.iter().rev().fold(0, |acc, &c| gf.mul(acc, x) ^ c)
}

/// Formal derivative (characteristic 2: only odd-degree terms survive).
pub(crate) fn derivative(p: &[u128]) -> Poly {
    let mut out: Poly = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
        .collect();
    trim(&mut out);
    out
}

/// All roots of `f`, provided `f` splits into distinct linear factors over
/// the field; `None` otherwise. Uses `f | x^(2^w) - x` to test splitting and
/// the trace map `Tr(beta x)` over the polynomial basis to separate roots.
pub(crate) fn distinct_roots(gf: &Gf, f: &[u128]) -> Option<Vec<u128>> {
    let f = monic(gf, f);
    let d = degree(&f)?;
    if d == 0 {
        return Some(Vec::new());
    }
    let x = rem(gf, &[0, 1], &f);
    let mut frob = x.clone();
    for _ in 0..gf.width() {
        frob = mul_mod(gf, &frob, &frob, &f);
    }
    if frob != x {
        return None;
    }
    let mut roots = Vec::with_capacity(d);
    split(gf, f, &mut roots);
    roots.sort_unstable();
    Some(roots)
}

fn split(gf: &Gf, f: Poly, roots: &mut Vec<u128>) {
    let d = degree(&f).expect("nonzero");
    if d == 0 {
        return;
    }
    if d == 1 {
        // monic x + f0
        roots.push(f[0]);
        return;
    }
    for i in 0..gf.width() {
        let beta = 1u128 << i;
        let mut term = rem(gf, &[0, beta], &f);
        let mut trace = term.clone();
        for _ in 1..gf.width() {
            term = mul_mod(gf, &term, &term, &f);
            trace = add(&trace, &term);
        }
        let g = gcd(gf, &f, &trace);
        let dg = degree(&g).unwrap_or(0);
        if dg > 0 && dg < d {
            let (h, _) = div_rem(gf, &f, &g);
            split(gf, g, roots);
            split(gf, monic(gf, &h), roots);
            return;
        }
    }
    unreachable!("the trace basis separates distinct roots");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_identity() {
        let gf = Gf::new(8).unwrap();
        let a = vec![5, 7, 0, 9, 200, 1];
        let m = vec![3, 0, 11];
        let (q, r) = div_rem(&gf, &a, &m);
        assert!(degree(&r).is_none_or(|d| d < 2));
        assert_eq!(add(&mul(&gf, &q, &m), &r), a);
    }

    #[test]
    fn roots_of_products_of_linears() {
        for w in [8u32, 24, 48, 128] {
            let gf = Gf::new(w).unwrap();
            let want: Vec<u128> = vec![1, 2, 0x1234 & gf.order(), gf.order() - 5, 0];
            let mut f = vec![1u128];
            for &r in &want {
                f = mul(&gf, &f, &[r, 1]);
            }
            let mut sorted = want.clone();
            sorted.sort_unstable();
            assert_eq!(distinct_roots(&gf, &f), Some(sorted), "w={w}");
        }
    }

    #[test]
    fn rejects_non_splitting() {
        let gf = Gf::new(8).unwrap();
        // (x + 3)^2 has a repeated root
        let sq = mul(&gf, &[3, 1], &[3, 1]);
        assert_eq!(distinct_roots(&gf, &sq), None);
        // x^2 + x + c has no root exactly when Tr(c) = 1
        let c = (1u128..256)
            .find(|&c| (0u128..256).all(|x| gf.mul(x, x) ^ x ^ c != 0))
            .unwrap();
        assert_eq!(distinct_roots(&gf, &[c, 1, 1]), None);
    }

    #[test]
    fn derivative_in_characteristic_two() {
        assert_eq!(derivative(&[1, 2, 3, 4]), vec![2, 0, 4]);
        assert_eq!(derivative(&[7]), Vec::<u128>::new());
    }
}
