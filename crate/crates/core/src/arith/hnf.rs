//! Row-style Hermite normal form over the integers, built incrementally.
//!
//! Rows are inserted one at a time into an upper-triangular basis indexed by
//! pivot column. Once the lattice has full rank with index `D`, the lattice
//! contains `D * Z^n`, so incoming rows and off-pivot entries are reduced
//! modulo `D` to keep entry sizes bounded.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug)]
pub struct Hnf {
    ncols: usize,
    pivots: Vec<Option<Vec<BigInt>>>,
    rank: usize,
    modulus: Option<BigInt>,
}

impl Hnf {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            pivots: vec![None; ncols],
            rank: 0,
            modulus: None,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.ncols
    }

    /// Absolute determinant (lattice index) when full rank.
    pub fn determinant(&self) -> Option<BigInt> {
        if !self.is_full_rank() {
            return None;
        }
        Some(
            self.pivots
                .iter()
                .map(|r| r.as_ref().expect("full rank")[0].clone())
                .fold(BigInt::one(), |acc, p| acc * p),
        )
    }

    /// True once the lattice is all of Z^n.
    pub fn is_unimodular(&self) -> bool {
        self.determinant().is_some_and(|d| d.is_one())
    }

    fn reduce_mod(&self, row: &mut [BigInt]) {
        if let Some(m) = &self.modulus {
            for x in row.iter_mut() {
                *x = x.mod_floor(m);
            }
        }
    }

    /// Inserts a row of length `ncols`. Pivot rows are stored starting at
    /// their pivot column (entry 0 is the positive pivot).
    pub fn insert(&mut self, row: &[BigInt]) {
        assert_eq!(row.len(), self.ncols);
        let mut r: Vec<BigInt> = row.to_vec();
        self.reduce_mod(&mut r);
        let mut c = 0;
        while c < self.ncols {
            let Some(offset) = r[c..].iter().position(|x| !x.is_zero()) else {
                return;
            };
            c += offset;
            let tail: Vec<BigInt> = r[c..].to_vec();
            match self.pivots[c].take() {
                None => {
                    let mut tail = tail;
                    if tail[0].is_negative() {
                        tail.iter_mut().for_each(|x| *x = -x.clone());
                    }
                    self.pivots[c] = Some(tail);
                    self.rank += 1;
                    self.refresh_modulus();
                    return;
                }
                Some(prow) => {
                    let a = prow[0].clone();
                    let b = tail[0].clone();
                    let eg = a.extended_gcd(&b);
                    let (g, x, y) = (eg.gcd, eg.x, eg.y);
                    let (ag, bg) = (&a / &g, &b / &g);
                    let mut new_pivot: Vec<BigInt> = prow
                        .iter()
                        .zip(&tail)
                        .map(|(p, t)| &x * p + &y * t)
                        .collect();
                    let mut residual: Vec<BigInt> = prow
                        .iter()
                        .zip(&tail)
                        .map(|(p, t)| &ag * t - &bg * p)
                        .collect();
                    if new_pivot[0].is_negative() {
                        new_pivot.iter_mut().for_each(|v| *v = -v.clone());
                    }
                    if let Some(m) = &self.modulus {
                        for v in new_pivot.iter_mut().skip(1) {
                            *v = v.mod_floor(m);
                        }
                        for v in residual.iter_mut() {
                            *v = v.mod_floor(m);
                        }
                    }
                    self.pivots[c] = Some(new_pivot);
                    debug_assert!(residual[0].is_zero());
                    for (dst, src) in r[c..].iter_mut().zip(residual) {
                        *dst = src;
                    }
                    self.refresh_modulus();
                    c += 1;
                }
            }
        }
    }

    fn refresh_modulus(&mut self) {
        if let Some(d) = self.determinant() {
            self.modulus = Some(d);
        }
    }

    /// Reduces entries above each pivot into `[0, pivot)` and returns the
    /// canonical upper-triangular basis (zero rows for missing pivots).
    pub fn matrix(&self) -> Vec<Vec<BigInt>> {
        let n = self.ncols;
        let mut rows: Vec<Vec<BigInt>> = self
            .pivots
            .iter()
            .enumerate()
            .map(|(c, p)| match p {
                Some(tail) => {
                    let mut full = vec![BigInt::zero(); c];
                    full.extend(tail.iter().cloned());
                    full
                }
                None => vec![BigInt::zero(); n],
            })
            .collect();
        for c in (0..n).rev() {
            let pivot = rows[c][c].clone();
            if pivot.is_zero() {
                continue;
            }
            for r in 0..c {
                let q = rows[r][c].div_floor(&pivot);
                if q.is_zero() {
                    continue;
                }
                let pivot_row = rows[c].clone();
                for (x, p) in rows[r].iter_mut().zip(&pivot_row) {
                    *x -= &q * p;
                }
            }
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn gaussian_integer_ideal_one_plus_i_and_two() {
        // rows: (1+i), i(1+i) = -1+i, 2, 2i in basis (1, i)
        let mut h = Hnf::new(2);
        for r in [[1, 1], [-1, 1], [2, 0], [0, 2]] {
            h.insert(&bi(&r));
        }
        assert_eq!(h.determinant(), Some(BigInt::from(2)));
        assert_eq!(h.matrix(), vec![bi(&[1, 1]), bi(&[0, 2])]);
    }

    #[test]
    fn rank_deficient() {
        let mut h = Hnf::new(3);
        h.insert(&bi(&[1, 2, 3]));
        h.insert(&bi(&[2, 4, 6]));
        assert_eq!(h.rank(), 1);
        assert_eq!(h.determinant(), None);
    }

    #[test]
    fn determinant_matches_bareiss_on_fixed_matrix() {
        let m = [[2, 3, 1], [4, 1, -3], [0, 5, 7]];
        // det = 2(7+15) - 3(28-0) + 1(20-0) = 44 - 84 + 20 = -20
        let mut h = Hnf::new(3);
        for r in m {
            h.insert(&bi(&r));
        }
        assert_eq!(h.determinant(), Some(BigInt::from(20)));
        // extra rows inside the lattice do not change it
        h.insert(&bi(&[6, 4, -2]));
        assert_eq!(h.determinant(), Some(BigInt::from(20)));
        h.insert(&bi(&[1, 0, 0]));
        assert!(h.determinant().unwrap() <= BigInt::from(20));
    }
}
