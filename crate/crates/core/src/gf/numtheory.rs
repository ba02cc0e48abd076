//! Integer arithmetic needed to work with the multiplicative group of
//! GF(2^w): factoring `2^w - 1`, modular arithmetic on `u128`.

pub(crate) fn add_mod(a: u128, b: u128, n: u128) -> u128 {
    debug_assert!(a < n && b < n);
    if a >= n - b {
        a - (n - b)
    } else {
        a + b
    }
}

pub(crate) fn mul_mod(a: u128, b: u128, n: u128) -> u128 {
    let (a, b) = (a % n, b % n);
    if n <= u64::MAX as u128 {
        return (a * b) % n;
    }
    let (mut a, mut b) = (a, b);
    let mut r = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            r = add_mod(r, a, n);
        }
        a = add_mod(a, a, n);
        b >>= 1;
    }
    r
}

pub(crate) fn pow_mod(mut base: u128, mut exp: u128, n: u128) -> u128 {
    let mut r = 1 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            r = mul_mod(r, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    r
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

const WITNESSES: [u128; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Miller-Rabin with a fixed witness set. Deterministic below 3.3e24 and
/// overwhelmingly reliable beyond.
pub(crate) fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard's rho. `n` must be composite and odd.
fn rho(n: u128) -> u128 {
    let mut c = 1u128;
    loop {
        let f = |x: u128| add_mod(mul_mod(x, x, n), c % n, n);
        let (mut y, mut r, mut q) = (2u128 % n, 1u64, 1u128);
        let mut g = 1u128;
        let mut x = y;
        let mut ys = y;
        const BATCH: u64 = 64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn factor_into(n: u128, out: &mut Vec<u128>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = rho(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Prime factorisation as sorted `(prime, exponent)` pairs.
pub(crate) fn factorize(mut n: u128) -> Vec<(u128, u32)> {
    let mut primes = Vec::new();
    for p in 2u128..1000 {
        while n.is_multiple_of(p) {
            primes.push(p);
            n /= p;
        }
    }
    factor_into(n, &mut primes);
    collect_powers(primes)
}

/// Factorisation of `2^w - 1`, split algebraically through
/// `2^(2k) - 1 = (2^k - 1)(2^k + 1)` so that every rho call stays small.
pub(crate) fn factorize_group_order(w: u32) -> Vec<(u128, u32)> {
    let mut primes = Vec::new();
    mersenne_parts(w, &mut primes);
    collect_powers(primes)
}

fn mersenne_parts(w: u32, out: &mut Vec<u128>) {
    if w.is_multiple_of(2) && w > 0 {
        mersenne_parts(w / 2, out);
        let plus = (1u128 << (w / 2)) + 1;
        for (p, e) in factorize(plus) {
            out.extend(std::iter::repeat_n(p, e as usize));
        }
    } else {
        let minus = if w == 128 { u128::MAX } else { (1u128 << w) - 1 };
        for (p, e) in factorize(minus) {
            out.extend(std::iter::repeat_n(p, e as usize));
        }
    }
}

fn collect_powers(mut primes: Vec<u128>) -> Vec<(u128, u32)> {
    primes.sort_unstable();
    let mut out: Vec<(u128, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Inverse of `a` modulo the prime power `p^e`, for `a` coprime to `p`.
pub(crate) fn inv_mod_prime_power(a: u128, p: u128, e: u32) -> u128 {
    let modulus = p.pow(e);
    let phi = p.pow(e - 1) * (p - 1);
    pow_mod(a, phi - 1, modulus)
}
