//! Finite fields GF(p^k) with elements encoded as integers in `[0, p^k)`.
//!
//! The encoding of an element is the integer whose base-`p` digits are the
//! coefficients of its representative polynomial modulo the defining
//! polynomial, least significant digit first. The defining polynomial is the
//! smallest monic irreducible of degree `k` in that same encoding, so the
//! field (and therefore every encoded coefficient) is reproducible.

use std::fmt;

use super::factor::{factor_u64, is_prime_u64};
use super::fpoly::Poly;
use crate::error::{Error, Result};

pub type Elem = u64;

#[derive(Clone, PartialEq, Eq)]
pub struct FiniteField {
    p: u64,
    degree: u32,
    order: u64,
    /// Monic defining polynomial over F_p, ascending coefficients, length degree+1.
    modulus: Vec<u64>,
}

impl fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{})", self.p, self.degree)
    }
}

const MAX_ORDER: u64 = 1 << 32;

impl FiniteField {
    pub fn prime(p: u64) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        if p >= MAX_ORDER {
            return Err(Error::domain(format!("field characteristic {p} too large")));
        }
        Ok(Self {
            p,
            degree: 1,
            order: p,
            modulus: vec![0, 1],
        })
    }

    /// Builds GF(q) for a prime power `q`.
    pub fn with_order(q: u64) -> Result<Self> {
        let f = factor_u64(q);
        if f.len() != 1 {
            return Err(Error::domain(format!("{q} is not a prime power")));
        }
        let (p, k) = f[0];
        Self::extension(p, k)
    }

    /// Builds GF(p^k).
    pub fn extension(p: u64, k: u32) -> Result<Self> {
        let base = Self::prime(p)?;
        if k == 1 {
            return Ok(base);
        }
        let order = (p as u128).pow(k);
        if order >= MAX_ORDER as u128 {
            return Err(Error::domain(format!("field order {p}^{k} too large")));
        }
        let tail_count = p.pow(k);
        for code in 0..tail_count {
            let mut coeffs = Vec::with_capacity(k as usize + 1);
            let mut c = code;
            for _ in 0..k {
                coeffs.push(c % p);
                c /= p;
            }
            coeffs.push(1);
            let candidate = Poly::from_coeffs(coeffs.clone());
            if base.is_irreducible(&candidate) {
                return Ok(Self {
                    p,
                    degree: k,
                    order: order as u64,
                    modulus: coeffs,
                });
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn contains(&self, a: Elem) -> bool {
        a < self.order
    }

    pub fn from_int(&self, n: i64) -> Elem {
        n.rem_euclid(self.p as i64) as u64
    }

    fn digits(&self, mut a: Elem) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.degree as usize);
        for _ in 0..self.degree {
            out.push(a % self.p);
            a /= self.p;
        }
        out
    }

    fn undigits(&self, d: &[u64]) -> Elem {
        d.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.degree == 1 {
            return (a + b) % self.p;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let s: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.undigits(&s)
    }

    pub fn neg(&self, a: Elem) -> Elem {
        if self.degree == 1 {
            return (self.p - a) % self.p;
        }
        let d: Vec<u64> = self.digits(a).iter().map(|x| (self.p - x) % self.p).collect();
        self.undigits(&d)
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        let p = self.p as u128;
        if self.degree == 1 {
            return ((a as u128 * b as u128) % p) as u64;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let k = self.degree as usize;
        let mut prod = vec![0u128; 2 * k - 1];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u128 * y as u128) % p;
            }
        }
        for i in (k..prod.len()).rev() {
            let c = prod[i];
            if c == 0 {
                continue;
            }
            prod[i] = 0;
            for j in 0..k {
                let m = self.modulus[j] as u128;
                prod[i - k + j] = (prod[i - k + j] + (p - c) * m) % p;
            }
        }
        let low: Vec<u64> = prod[..k].iter().map(|&c| c as u64).collect();
        self.undigits(&low)
    }

    pub fn pow(&self, mut a: Elem, mut e: u64) -> Elem {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::domain("inverse of zero in a finite field"));
        }
        Ok(self.pow(a, self.order - 2))
    }

    /// The Frobenius x -> x^p applied `times` times.
    pub fn frobenius(&self, a: Elem, times: u32) -> Elem {
        let mut x = a;
        for _ in 0..times {
            x = self.pow(x, self.p);
        }
        x
    }

    /// The p-th root (inverse Frobenius).
    pub fn pth_root(&self, a: Elem) -> Elem {
        self.pow(a, self.order / self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_arithmetic() {
        let f = FiniteField::prime(7).unwrap();
        assert_eq!(f.mul(3, 5), 1);
        assert_eq!(f.inv(3).unwrap(), 5);
        assert_eq!(f.sub(2, 5), 4);
        assert!(FiniteField::prime(9).is_err());
    }

    #[test]
    fn gf4_is_a_field() {
        let f = FiniteField::with_order(4).unwrap();
        assert_eq!(f.degree(), 2);
        for a in 1..4 {
            let inv = f.inv(a).unwrap();
            assert_eq!(f.mul(a, inv), 1, "a={a}");
            assert_eq!(f.pow(a, 3), 1);
        }
        // the defining polynomial is x^2 + x + 1; x = code 2 satisfies it
        let x = 2;
        assert_eq!(f.add(f.add(f.mul(x, x), x), 1), 0);
    }

    #[test]
    fn gf27_multiplicative_group_is_cyclic_of_order_26() {
        let f = FiniteField::with_order(27).unwrap();
        let has_generator = (1..27).any(|g| {
            (1..26).all(|e| f.pow(g, e) != 1) && f.pow(g, 26) == 1
        });
        assert!(has_generator);
        for a in 0..27 {
            assert_eq!(f.frobenius(f.pth_root(a), 1), a);
        }
    }
}
