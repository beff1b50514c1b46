//! Dense univariate polynomials over a [`FiniteField`] and their
//! factorization: square-free decomposition, distinct-degree splitting and
//! Cantor-Zassenhaus equal-degree splitting driven by a seeded ChaCha stream.

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gf::{Elem, FiniteField};

/// Coefficients in ascending degree; no trailing zeros. The zero polynomial
/// is the empty vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    coeffs: Vec<Elem>,
}

impl Poly {
    pub fn from_coeffs(mut coeffs: Vec<Elem>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![1] }
    }

    pub fn x() -> Self {
        Self { coeffs: vec![0, 1] }
    }

    pub fn constant(c: Elem) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn coeffs(&self) -> &[Elem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Elem {
        self.coeffs.last().copied().unwrap_or(0)
    }
}

impl FiniteField {
    pub fn poly_add(&self, a: &Poly, b: &Poly) -> Poly {
        let n = a.coeffs.len().max(b.coeffs.len());
        let c = (0..n)
            .map(|i| {
                let x = a.coeffs.get(i).copied().unwrap_or(0);
                let y = b.coeffs.get(i).copied().unwrap_or(0);
                self.add(x, y)
            })
            .collect();
        Poly::from_coeffs(c)
    }

    pub fn poly_neg(&self, a: &Poly) -> Poly {
        Poly::from_coeffs(a.coeffs.iter().map(|&c| self.neg(c)).collect())
    }

    pub fn poly_sub(&self, a: &Poly, b: &Poly) -> Poly {
        self.poly_add(a, &self.poly_neg(b))
    }

    pub fn poly_scale(&self, a: &Poly, c: Elem) -> Poly {
        Poly::from_coeffs(a.coeffs.iter().map(|&x| self.mul(x, c)).collect())
    }

    pub fn poly_mul(&self, a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() || b.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0; a.coeffs.len() + b.coeffs.len() - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                out[i + j] = self.add(out[i + j], self.mul(x, y));
            }
        }
        Poly::from_coeffs(out)
    }

    /// Euclidean division; panics on division by the zero polynomial.
    pub fn poly_divrem(&self, a: &Poly, b: &Poly) -> (Poly, Poly) {
        let db = b.degree().expect("division by zero polynomial");
        let inv_lead = self.inv(b.leading()).expect("nonzero leading coefficient");
        let mut rem = a.coeffs.clone();
        if rem.len() <= db {
            return (Poly::zero(), a.clone());
        }
        let mut quot = vec![0; rem.len() - db];
        for i in (db..rem.len()).rev() {
            let c = rem[i];
            if c == 0 {
                continue;
            }
            let q = self.mul(c, inv_lead);
            quot[i - db] = q;
            for (j, &bc) in b.coeffs.iter().enumerate() {
                rem[i - db + j] = self.sub(rem[i - db + j], self.mul(q, bc));
            }
        }
        rem.truncate(db);
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    pub fn poly_rem(&self, a: &Poly, b: &Poly) -> Poly {
        self.poly_divrem(a, b).1
    }

    pub fn poly_monic(&self, a: &Poly) -> Poly {
        if a.is_zero() {
            return Poly::zero();
        }
        let inv = self.inv(a.leading()).expect("nonzero leading coefficient");
        self.poly_scale(a, inv)
    }

    /// Monic greatest common divisor (zero when both inputs are zero).
    pub fn poly_gcd(&self, a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = self.poly_rem(&x, &y);
            x = y;
            y = r;
        }
        self.poly_monic(&x)
    }

    pub fn poly_derivative(&self, a: &Poly) -> Poly {
        let c = a
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| self.mul(self.from_int((i as u64 % self.characteristic()) as i64), c))
            .collect();
        Poly::from_coeffs(c)
    }

    pub fn poly_eval(&self, a: &Poly, x: Elem) -> Elem {
        a.coeffs.iter().rev().fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }

    pub fn poly_mulmod(&self, a: &Poly, b: &Poly, m: &Poly) -> Poly {
        self.poly_rem(&self.poly_mul(a, b), m)
    }

    pub fn poly_powmod(&self, base: &Poly, exp: &BigUint, m: &Poly) -> Poly {
        let mut acc = self.poly_rem(&Poly::one(), m);
        let b = self.poly_rem(base, m);
        for i in (0..exp.bits()).rev() {
            acc = self.poly_mulmod(&acc, &acc, m);
            if exp.bit(i) {
                acc = self.poly_mulmod(&acc, &b, m);
            }
        }
        acc
    }

    /// Applies the coefficient Frobenius c -> c^p `times` times.
    pub fn poly_frobenius(&self, a: &Poly, times: u32) -> Poly {
        Poly::from_coeffs(a.coeffs.iter().map(|&c| self.frobenius(c, times)).collect())
    }

    /// Rabin's irreducibility test.
    pub fn is_irreducible(&self, f: &Poly) -> bool {
        let n = match f.degree() {
            None | Some(0) => return false,
            Some(1) => return true,
            Some(n) => n,
        };
        let f = self.poly_monic(f);
        let q = BigUint::from(self.order());
        let x = Poly::x();
        let x_pow = |k: usize| -> Poly {
            // x^(q^k) mod f by repeated q-th powering
            let mut h = x.clone();
            for _ in 0..k {
                h = self.poly_powmod(&h, &q, &f);
            }
            h
        };
        if self.poly_sub(&x_pow(n), &self.poly_rem(&x, &f)).is_zero() {
            for (r, _) in super::factor::factor_u64(n as u64) {
                let h = self.poly_sub(&x_pow(n / r as usize), &x);
                if !self.poly_gcd(&h, &f).is_one() {
                    return false;
                }
            }
            true
        } else {
            false
        }
    }

    fn squarefree_decomposition(&self, f: &Poly) -> Vec<(Poly, u32)> {
        let mut out = Vec::new();
        let f = self.poly_monic(f);
        if f.degree().unwrap_or(0) == 0 {
            return out;
        }
        let df = self.poly_derivative(&f);
        let mut c = self.poly_gcd(&f, &df);
        let mut w = self.poly_divrem(&f, &c).0;
        let mut i = 1;
        while !w.is_one() {
            let y = self.poly_gcd(&w, &c);
            let fac = self.poly_divrem(&w, &y).0;
            if !fac.is_one() {
                out.push((fac, i));
            }
            w = y.clone();
            c = self.poly_divrem(&c, &y).0;
            i += 1;
        }
        if !c.is_one() {
            // c is a polynomial in x^p
            let p = self.characteristic() as usize;
            let root = Poly::from_coeffs(
                c.coeffs
                    .iter()
                    .step_by(p)
                    .map(|&a| self.pth_root(a))
                    .collect(),
            );
            for (g, e) in self.squarefree_decomposition(&root) {
                out.push((g, e * p as u32));
            }
        }
        out
    }

    fn distinct_degree(&self, f: &Poly) -> Vec<(Poly, usize)> {
        let mut out = Vec::new();
        let mut rest = f.clone();
        let q = BigUint::from(self.order());
        let x = Poly::x();
        let mut h = x.clone();
        let mut d = 0;
        while let Some(deg) = rest.degree() {
            if deg < 2 * (d + 1) {
                if deg > 0 {
                    out.push((rest.clone(), deg));
                }
                break;
            }
            d += 1;
            h = self.poly_powmod(&h, &q, &rest);
            let g = self.poly_gcd(&self.poly_sub(&h, &x), &rest);
            if !g.is_one() {
                rest = self.poly_divrem(&rest, &g).0;
                h = self.poly_rem(&h, &rest);
                out.push((g, d));
            }
        }
        out
    }

    fn random_poly(&self, rng: &mut ChaCha8Rng, below_degree: usize) -> Poly {
        Poly::from_coeffs((0..below_degree).map(|_| rng.gen_range(0..self.order())).collect())
    }

    fn equal_degree(&self, f: &Poly, d: usize, rng: &mut ChaCha8Rng, out: &mut Vec<Poly>) {
        let n = f.degree().unwrap_or(0);
        if n == 0 {
            return;
        }
        if n == d {
            out.push(self.poly_monic(f));
            return;
        }
        loop {
            let a = self.random_poly(rng, n);
            if a.degree().unwrap_or(0) == 0 {
                continue;
            }
            let b = if self.characteristic() == 2 {
                // trace map a + a^2 + ... + a^(2^(k d - 1))
                let steps = self.degree() as usize * d;
                let two = BigUint::from(2u32);
                let mut term = self.poly_rem(&a, f);
                let mut acc = term.clone();
                for _ in 1..steps {
                    term = self.poly_powmod(&term, &two, f);
                    acc = self.poly_add(&acc, &term);
                }
                acc
            } else {
                let e = (BigUint::from(self.order()).pow(d as u32) - BigUint::one()) >> 1;
                self.poly_sub(&self.poly_powmod(&a, &e, f), &Poly::one())
            };
            let g = self.poly_gcd(&b, f);
            let dg = g.degree().unwrap_or(0);
            if dg > 0 && dg < n {
                let h = self.poly_divrem(f, &g).0;
                self.equal_degree(&g, d, rng, out);
                self.equal_degree(&h, d, rng, out);
                return;
            }
        }
    }

    /// Complete factorization into monic irreducibles with multiplicities,
    /// sorted by (degree, coefficients). The leading coefficient is dropped.
    /// `seed` drives the equal-degree splitting so output is reproducible.
    pub fn factor(&self, f: &Poly, seed: u64) -> Vec<(Poly, u32)> {
        assert!(!f.is_zero(), "cannot factor the zero polynomial");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<(Poly, u32)> = Vec::new();
        for (sqf, mult) in self.squarefree_decomposition(f) {
            for (block, d) in self.distinct_degree(&sqf) {
                let mut pieces = Vec::new();
                self.equal_degree(&block, d, &mut rng, &mut pieces);
                for piece in pieces {
                    match out.iter_mut().find(|(g, _)| *g == piece) {
                        Some(entry) => entry.1 += mult,
                        None => out.push((piece, mult)),
                    }
                }
            }
        }
        out.sort_by(|(a, _), (b, _)| a.degree().cmp(&b.degree()).then_with(|| a.coeffs.cmp(&b.coeffs)));
        out
    }

    /// Order of vanishing of `f` at the monic irreducible `pi`.
    pub fn poly_valuation(&self, f: &Poly, pi: &Poly) -> u32 {
        assert!(!f.is_zero());
        let mut v = 0;
        let mut rest = f.clone();
        loop {
            let (q, r) = self.poly_divrem(&rest, pi);
            if !r.is_zero() {
                return v;
            }
            rest = q;
            v += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[u64]) -> Poly {
        Poly::from_coeffs(c.to_vec())
    }

    fn expand(f: &FiniteField, factors: &[(Poly, u32)]) -> Poly {
        factors.iter().fold(Poly::one(), |acc, (g, e)| {
            (0..*e).fold(acc, |a, _| f.poly_mul(&a, g))
        })
    }

    #[test]
    fn factor_t3_plus_1_over_f2() {
        let f2 = FiniteField::prime(2).unwrap();
        let facs = f2.factor(&p(&[1, 0, 0, 1]), 7);
        assert_eq!(facs, vec![(p(&[1, 1]), 1), (p(&[1, 1, 1]), 1)]);
    }

    #[test]
    fn factor_with_repeated_and_inseparable_parts() {
        let f3 = FiniteField::prime(3).unwrap();
        // (x+1)^3 (x^2+1)^2 x
        let g = f3.poly_mul(
            &f3.poly_mul(&p(&[1, 1]), &f3.poly_mul(&p(&[1, 1]), &p(&[1, 1]))),
            &f3.poly_mul(&f3.poly_mul(&p(&[1, 0, 1]), &p(&[1, 0, 1])), &p(&[0, 1])),
        );
        let facs = f3.factor(&g, 1);
        assert_eq!(facs, vec![(p(&[0, 1]), 1), (p(&[1, 1]), 3), (p(&[1, 0, 1]), 2)]);
        assert_eq!(expand(&f3, &facs), g);
    }

    #[test]
    fn factor_over_gf4() {
        let f4 = FiniteField::with_order(4).unwrap();
        // x^4 - x splits into linear factors over GF(4)
        let g = p(&[0, 1, 0, 0, 1]);
        let g = f4.poly_sub(&g, &p(&[0, 2]));
        let g = f4.poly_add(&g, &p(&[0, 2]));
        let facs = f4.factor(&g, 3);
        assert_eq!(facs.len(), 4);
        assert!(facs.iter().all(|(h, e)| h.degree() == Some(1) && *e == 1));
    }

    #[test]
    fn rabin_test_matches_brute_force_roots_for_cubics() {
        let f5 = FiniteField::prime(5).unwrap();
        for code in 0..125u64 {
            let c = vec![code % 5, (code / 5) % 5, code / 25, 1];
            let g = p(&c);
            let has_root = (0..5).any(|x| f5.poly_eval(&g, x) == 0);
            assert_eq!(f5.is_irreducible(&g), !has_root, "{c:?}");
        }
    }
}
