//! Integer factorization: trial division up to 10^6, then Miller-Rabin and
//! Brent's variant of Pollard rho for a residue that fits in 64 bits.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

const TRIAL_LIMIT: u64 = 1_000_000;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &SMALL {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
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

/// Finds a nontrivial factor of an odd composite `n` (Brent's cycle search).
fn pollard_brent(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut r = 1u64;
        let mut ys = 2u64;
        const M: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..M.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += M;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
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

fn push_factor(out: &mut Vec<(u64, u32)>, p: u64) {
    match out.iter_mut().find(|(q, _)| *q == p) {
        Some(entry) => entry.1 += 1,
        None => out.push((p, 1)),
    }
}

fn rho_split(n: u64, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        push_factor(out, n);
        return;
    }
    let d = pollard_brent(n);
    rho_split(d, out);
    rho_split(n / d, out);
}

/// Factors a 64-bit integer into sorted `(prime, exponent)` pairs.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    let mut d = 2u64;
    while d <= TRIAL_LIMIT && d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        rho_split(n, &mut out);
    }
    out.sort_unstable();
    out
}

/// Factors an arbitrary-precision positive integer.
///
/// Fails with a resource error when, after trial division, the unfactored
/// cofactor is composite-or-unknown and does not fit in 64 bits.
pub fn factor_biguint(n: &BigUint) -> Result<Vec<(BigUint, u32)>> {
    if n.is_zero() {
        return Err(Error::domain("cannot factor zero"));
    }
    if let Some(small) = n.to_u64() {
        return Ok(factor_u64(small)
            .into_iter()
            .map(|(p, e)| (BigUint::from(p), e))
            .collect());
    }
    let mut rest = n.clone();
    let mut out = Vec::new();
    let mut d = 2u64;
    let mut exhausted = false;
    while d <= TRIAL_LIMIT {
        let dd = BigUint::from(d);
        if &dd * &dd > rest {
            exhausted = true;
            break;
        }
        if (&rest % &dd).is_zero() {
            let mut e = 0;
            while (&rest % &dd).is_zero() {
                rest /= &dd;
                e += 1;
            }
            out.push((dd, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if rest.is_one() {
        return Ok(out);
    }
    let limit = BigUint::from(TRIAL_LIMIT);
    if exhausted || &limit * &limit > rest {
        // no divisor up to sqrt(rest)
        out.push((rest, 1));
        return Ok(out);
    }
    match rest.to_u64() {
        Some(r) => {
            for (p, e) in factor_u64(r) {
                out.push((BigUint::from(p), e));
            }
            out.sort();
            Ok(out)
        }
        None => Err(Error::Resource {
            message: "cofactor exceeds 64 bits after trial division".into(),
            residue: rest.to_string(),
        }),
    }
}

pub fn euler_phi(n: u64) -> u64 {
    factor_u64(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn mobius(n: u64) -> i64 {
    let f = factor_u64(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factor_u64(n) {
        let current = divs.clone();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            divs.extend(current.iter().map(|d| d * pk));
        }
    }
    divs.sort_unstable();
    divs
}

/// Primes in ascending order starting at 2.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    (2..=limit).filter(|&n| is_prime_u64(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorizations() {
        assert_eq!(factor_u64(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factor_u64(1), vec![]);
        assert_eq!(factor_u64(10007), vec![(10007, 1)]);
        assert_eq!(factor_u64(999_983 * 1_000_003), vec![(999_983, 1), (1_000_003, 1)]);
    }

    #[test]
    fn rho_splits_semiprime_above_trial_limit() {
        let p = 4_294_967_291u64; // 2^32 - 5
        let q = 4_294_967_279u64;
        assert_eq!(factor_u64(p * q), vec![(q, 1), (p, 1)]);
    }

    #[test]
    fn big_cofactor_is_reported() {
        let p = BigUint::from(18_446_744_073_709_551_557u64); // largest 64-bit prime
        let n = &p * &p;
        match factor_biguint(&n) {
            Err(Error::Resource { residue, .. }) => assert_eq!(residue, n.to_string()),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn arithmetic_functions() {
        assert_eq!(euler_phi(12), 4);
        assert_eq!(euler_phi(10007), 10006);
        assert_eq!(mobius(30), -1);
        assert_eq!(mobius(12), 0);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(primes_up_to(20), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }
}
