//! Exact arithmetic in Q(zeta_N) = Q[x]/Phi_N(x) in the power basis
//! 1, zeta, ..., zeta^(phi(N)-1), plus numerical embeddings
//! zeta -> exp(2 pi i k / N).

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::factor::divisors;
use crate::error::{Error, Result};

/// The ring Z[zeta_N] / field Q(zeta_N) context: conductor and cyclotomic polynomial.
#[derive(Debug, PartialEq, Eq)]
pub struct CyclotomicRing {
    conductor: u64,
    /// Monic Phi_N, ascending coefficients, length phi(N) + 1.
    modulus: Vec<BigInt>,
}

impl CyclotomicRing {
    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn phi(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn modulus(&self) -> &[BigInt] {
        &self.modulus
    }

    /// Residues k in [1, N] with gcd(k, N) = 1, ascending. For N = 1 this is [1].
    pub fn units(&self) -> Vec<u64> {
        let n = self.conductor;
        (1..=n).filter(|k| k.gcd(&n) == 1).take(self.phi()).collect()
    }

    /// Reduces a coefficient vector of any length modulo Phi_N in place.
    fn reduce<T>(&self, a: &mut Vec<T>)
    where
        T: Clone + Zero + for<'a> std::ops::SubAssign<&'a T>,
        for<'a> &'a T: std::ops::Mul<&'a BigInt, Output = T>,
    {
        let phi = self.phi();
        if a.len() <= phi {
            a.resize(phi, T::zero());
            return;
        }
        for i in (phi..a.len()).rev() {
            if a[i].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut a[i], T::zero());
            for (j, m) in self.modulus[..phi].iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                let prod = &c * m;
                a[i - phi + j] -= &prod;
            }
        }
        a.truncate(phi);
    }

    pub fn reduce_rational(&self, a: &mut Vec<BigRational>) {
        self.reduce(a)
    }

    pub fn reduce_integer(&self, a: &mut Vec<BigInt>) {
        self.reduce(a)
    }

    /// Multiplies an integer vector (reduced form) by zeta in place.
    pub fn shift_integer(&self, a: &mut Vec<BigInt>) {
        let phi = self.phi();
        let top = a.pop().unwrap_or_default();
        a.insert(0, BigInt::zero());
        if !top.is_zero() {
            for j in 0..phi {
                a[j] -= &top * &self.modulus[j];
            }
        }
    }
}

fn cyclotomic_poly(n: u64, cache: &mut HashMap<u64, Vec<BigInt>>) -> Vec<BigInt> {
    if let Some(p) = cache.get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by every Phi_d with d | n, d < n
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    for d in divisors(n) {
        if d == n {
            continue;
        }
        let den = cyclotomic_poly(d, cache);
        num = exact_div_monic(&num, &den);
    }
    cache.insert(n, num.clone());
    num
}

fn exact_div_monic(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dd = den.len() - 1;
    let mut rem = num.to_vec();
    let qlen = num.len() - dd;
    let mut quot = vec![BigInt::zero(); qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dd].clone();
        if c.is_zero() {
            continue;
        }
        for (j, d) in den.iter().enumerate() {
            rem[i + j] -= &c * d;
        }
        quot[i] = c;
    }
    debug_assert!(rem.iter().all(|x| x.is_zero()));
    quot
}

/// Shared ring context for conductor `n` (cached per process).
pub fn ring(n: u64) -> Arc<CyclotomicRing> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CyclotomicRing>>>> = OnceLock::new();
    static POLYS: OnceLock<Mutex<HashMap<u64, Vec<BigInt>>>> = OnceLock::new();
    assert!(n >= 1, "conductor must be positive");
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("ring cache").get(&n) {
        return r.clone();
    }
    let modulus = {
        let mut polys = POLYS.get_or_init(|| Mutex::new(HashMap::new())).lock().expect("poly cache");
        cyclotomic_poly(n, &mut polys)
    };
    let r = Arc::new(CyclotomicRing {
        conductor: n,
        modulus,
    });
    cache.lock().expect("ring cache").entry(n).or_insert(r).clone()
}

/// An element of Q(zeta_N) in reduced power-basis form.
#[derive(Clone)]
pub struct CyclotomicElement {
    ring: Arc<CyclotomicRing>,
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for CyclotomicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyc{}[", self.ring.conductor)?;
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*z^{j}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, "]")
    }
}

impl CyclotomicElement {
    /// Builds an element from an arbitrary-length coefficient list in powers
    /// of zeta, reducing modulo Phi_N.
    pub fn from_coeffs(n: u64, coeffs: Vec<BigRational>) -> Self {
        let ring = ring(n);
        let mut c = coeffs;
        ring.reduce_rational(&mut c);
        Self { ring, coeffs: c }
    }

    pub fn from_integers(n: u64, coeffs: &[i64]) -> Self {
        Self::from_coeffs(
            n,
            coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect(),
        )
    }

    pub fn from_rational(n: u64, c: BigRational) -> Self {
        Self::from_coeffs(n, vec![c])
    }

    pub fn from_int(n: u64, c: i64) -> Self {
        Self::from_rational(n, BigRational::from_integer(c.into()))
    }

    pub fn zero(n: u64) -> Self {
        Self::from_coeffs(n, vec![])
    }

    pub fn one(n: u64) -> Self {
        Self::from_int(n, 1)
    }

    /// zeta_N^j for any integer j.
    pub fn zeta_pow(n: u64, j: i64) -> Self {
        let e = j.rem_euclid(n as i64) as usize;
        let mut c = vec![BigRational::zero(); e + 1];
        c[e] = BigRational::one();
        Self::from_coeffs(n, c)
    }

    pub fn zeta(n: u64) -> Self {
        Self::zeta_pow(n, 1)
    }

    pub fn ring(&self) -> &Arc<CyclotomicRing> {
        &self.ring
    }

    pub fn conductor(&self) -> u64 {
        self.ring.conductor
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.first().is_some_and(|c| c.is_one())
            && self.coeffs.iter().skip(1).all(|c| c.is_zero())
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }

    /// `Some((c, j))` when the element is `c * zeta^j` with a single nonzero
    /// reduced coefficient.
    pub fn as_monomial(&self) -> Option<(BigRational, usize)> {
        let mut it = self.nonzero();
        let (j, c) = it.next()?;
        if it.next().is_some() {
            return None;
        }
        Some((c.clone(), j))
    }

    /// The rational value when the element lies in Q.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn denominator_lcm(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Integer coefficient vector, when integral.
    pub fn to_integer_vec(&self) -> Option<Vec<BigInt>> {
        self.coeffs
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect()
    }

    fn same_ring(&self, other: &Self) -> Result<()> {
        if self.ring.conductor != other.ring.conductor {
            return Err(Error::domain(format!(
                "conductor mismatch: {} vs {}",
                self.ring.conductor, other.ring.conductor
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_ring(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self {
            ring: self.ring.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_ring(other)?;
        let phi = self.ring.phi();
        let mut prod = vec![BigRational::zero(); (2 * phi).saturating_sub(1).max(1)];
        let rhs: Vec<(usize, &BigRational)> = other.nonzero().collect();
        for (i, a) in self.nonzero() {
            for &(j, b) in &rhs {
                prod[i + j] += a * b;
            }
        }
        self.ring.reduce_rational(&mut prod);
        Ok(Self {
            ring: self.ring.clone(),
            coeffs: prod,
        })
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = Self::one(self.conductor());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same ring");
            }
            base = base.mul(&base).expect("same ring");
            e >>= 1;
        }
        acc
    }

    /// Substitutes zeta -> zeta^stride into a length-`len` buffer and reduces
    /// in the ring of conductor `target`.
    fn spread(&self, stride: u64, modulo: u64, target: &Arc<CyclotomicRing>) -> Self {
        let mut out = vec![BigRational::zero(); modulo as usize];
        for (j, c) in self.nonzero() {
            let pos = ((j as u128 * stride as u128) % modulo as u128) as usize;
            out[pos] += c;
        }
        target.reduce_rational(&mut out);
        Self {
            ring: target.clone(),
            coeffs: out,
        }
    }

    /// The Galois automorphism sigma_k : zeta -> zeta^k.
    pub fn galois(&self, k: u64) -> Result<Self> {
        let n = self.conductor();
        if k.gcd(&n) != 1 {
            return Err(Error::domain(format!("gcd({k}, {n}) != 1")));
        }
        Ok(self.spread(k % n, n, &self.ring.clone()))
    }

    /// Image in Q(zeta_M) for a multiple M of the conductor.
    pub fn lift(&self, m: u64) -> Result<Self> {
        let n = self.conductor();
        if m % n != 0 {
            return Err(Error::domain(format!("{n} does not divide {m}")));
        }
        if m == n {
            return Ok(self.clone());
        }
        Ok(self.spread(m / n, m, &ring(m)))
    }

    /// Evaluates at zeta = exp(2 pi i k / N). Requires gcd(k, N) = 1.
    pub fn embed(&self, k: u64) -> Result<Complex64> {
        let n = self.conductor();
        if k.gcd(&n) != 1 {
            return Err(Error::domain(format!("gcd({k}, {n}) != 1")));
        }
        Ok(self.embed_unchecked(k))
    }

    pub(crate) fn embed_unchecked(&self, k: u64) -> Complex64 {
        let n = self.conductor();
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, c) in self.nonzero() {
            let c = rational_to_f64(c);
            let r = ((j as u128 * k as u128) % n as u128) as u64;
            let (s, co) = unit_angle(r, n);
            re += c * co;
            im += c * s;
        }
        Complex64::new(re, im)
    }

    /// |embed(k)|, exact for monomials c * zeta^j.
    pub(crate) fn abs_embed(&self, k: u64) -> f64 {
        match self.as_monomial() {
            Some((c, _)) => rational_to_f64(&c).abs(),
            None => self.embed_unchecked(k).norm(),
        }
    }

    /// `|c|` when the element is `c * zeta^j` for some rational `c`, decided
    /// exactly. Powers `zeta^j` with `j >= phi(N)` are not monomials in the
    /// reduced basis, so the exponent is guessed from one embedding and
    /// then verified.
    pub fn torsion_modulus(&self) -> Option<f64> {
        if let Some((c, _)) = self.as_monomial() {
            return Some(rational_to_f64(&c).abs());
        }
        if self.is_zero() {
            return None;
        }
        let n = self.conductor();
        let z = self.embed_unchecked(1);
        let turns = z.arg() / std::f64::consts::TAU * n as f64;
        for shift in [0.0, n as f64 / 2.0] {
            let guess = (turns + shift).round();
            if ((turns + shift) - guess).abs() > 1e-6 {
                continue;
            }
            let zp = Self::zeta_pow(n, guess as i64);
            let (j, base) = zp.nonzero().next()?;
            let c = &self.coeffs[j] / base;
            if self.coeffs.iter().zip(&zp.coeffs).all(|(a, b)| *a == &c * b) {
                return Some(rational_to_f64(&c).abs());
            }
        }
        None
    }
}

impl PartialEq for CyclotomicElement {
    fn eq(&self, other: &Self) -> bool {
        if self.conductor() == other.conductor() {
            return self.coeffs == other.coeffs;
        }
        let m = self.conductor().lcm(&other.conductor());
        match (self.lift(m), other.lift(m)) {
            (Ok(a), Ok(b)) => a.coeffs == b.coeffs,
            _ => false,
        }
    }
}

/// (sin, cos) of 2 pi r / n, using symmetry so that quarter turns are exact.
pub(crate) fn unit_angle(r: u64, n: u64) -> (f64, f64) {
    if r == 0 {
        return (0.0, 1.0);
    }
    if 4 * r == n {
        return (1.0, 0.0);
    }
    if 2 * r == n {
        return (0.0, -1.0);
    }
    if 4 * r == 3 * n {
        return (-1.0, 0.0);
    }
    (TAU * r as f64 / n as f64).sin_cos()
}

pub fn rational_to_f64(c: &BigRational) -> f64 {
    match (c.numer().to_f64(), c.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            // scale both to avoid overflow
            let shift = c.numer().bits().max(c.denom().bits()).saturating_sub(1000);
            let a = (c.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let b = (c.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            a / b
        }
    }
}

/// Natural log of a positive big integer without overflow.
pub fn ln_bigint(n: &BigInt) -> f64 {
    assert!(n.is_positive());
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn torsion_modulus_detects_all_powers() {
        for n in [1u64, 4, 5, 9, 12, 15] {
            for j in 0..2 * n as i64 {
                for c in [1i64, -3] {
                    let z = CyclotomicElement::zeta_pow(n, j).scale(&r(c));
                    assert_eq!(z.torsion_modulus(), Some(c.unsigned_abs() as f64), "n={n} j={j} c={c}");
                }
            }
        }
        let x = CyclotomicElement::from_coeffs(5, vec![r(1), r(1)]);
        assert_eq!(x.torsion_modulus(), None);
        assert_eq!(CyclotomicElement::zero(7).torsion_modulus(), None);
    }

    #[test]
    fn cyclotomic_polynomials() {
        let to_i = |n: u64| -> Vec<i64> { ring(n).modulus().iter().map(|c| c.to_i64().unwrap()).collect() };
        assert_eq!(to_i(1), vec![-1, 1]);
        assert_eq!(to_i(2), vec![1, 1]);
        assert_eq!(to_i(4), vec![1, 0, 1]);
        assert_eq!(to_i(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(ring(105).phi(), 48);
        assert!(ring(105).modulus().iter().any(|c| c.abs() == BigInt::from(2)));
    }

    #[test]
    fn zeta_to_the_conductor_is_one() {
        for n in [1, 2, 3, 4, 5, 8, 12, 15] {
            assert!(CyclotomicElement::zeta(n).pow(n).is_one(), "N={n}");
        }
    }

    #[test]
    fn embed_examples() {
        let i = CyclotomicElement::zeta(4).embed(1).unwrap();
        assert!((i - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let x = CyclotomicElement::from_integers(3, &[1, 1]).embed(1).unwrap();
        assert!((x - Complex64::new(0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
        // zeta + zeta^-1 with N = 5: zeta^4 reduces to -(1 + z + z^2 + z^3)
        let z = CyclotomicElement::zeta(5);
        let w = z.add(&CyclotomicElement::zeta_pow(5, -1)).unwrap();
        assert_eq!(w.coeffs(), &[r(-1), r(0), r(-1), r(-1)]);
        let direct = 2.0 * (2.0 * TAU / 5.0).cos();
        assert!((w.embed(2).unwrap().re - direct).abs() < 1e-14);
        assert!(w.embed(5).is_err());
    }

    #[test]
    fn lift_and_galois() {
        let i = CyclotomicElement::zeta(4);
        let lifted = i.lift(8).unwrap();
        assert_eq!(lifted, CyclotomicElement::zeta_pow(8, 2));
        assert_eq!(lifted, i);
        assert_eq!(i.galois(3).unwrap(), i.neg());
    }

    fn arb_element(n: u64) -> impl Strategy<Value = CyclotomicElement> {
        let phi = ring(n).phi();
        prop::collection::vec(-20i64..20, phi).prop_map(move |c| CyclotomicElement::from_integers(n, &c))
    }

    fn arb_triple() -> impl Strategy<Value = (CyclotomicElement, CyclotomicElement, CyclotomicElement)> {
        prop::sample::select(vec![3u64, 4, 5, 8, 12])
            .prop_flat_map(|n| (arb_element(n), arb_element(n), arb_element(n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn distributive((x, y, z) in arb_triple()) {
            let lhs = x.add(&y).unwrap().mul(&z).unwrap();
            let rhs = x.mul(&z).unwrap().add(&y.mul(&z).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn multiplication_commutes_and_associates((x, y, z) in arb_triple()) {
            prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
            prop_assert_eq!(x.mul(&y).unwrap().mul(&z).unwrap(), x.mul(&y.mul(&z).unwrap()).unwrap());
        }

        #[test]
        fn embedding_is_a_ring_homomorphism((x, y, _z) in arb_triple(), kk in 1u64..50) {
            let n = x.conductor();
            let k = (1..=n * 50).filter(|k| k.gcd(&n) == 1).nth(kk as usize % 8).unwrap();
            let lhs = x.mul(&y).unwrap().embed(k).unwrap();
            let rhs = x.embed(k).unwrap() * y.embed(k).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn galois_is_multiplicative((x, y, _z) in arb_triple()) {
            let n = x.conductor();
            for k in ring(n).units() {
                prop_assert_eq!(
                    x.mul(&y).unwrap().galois(k).unwrap(),
                    x.galois(k).unwrap().mul(&y.galois(k).unwrap()).unwrap()
                );
            }
        }
    }
}
