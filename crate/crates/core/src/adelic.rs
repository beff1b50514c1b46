//! Places of the base fields Q and F_q(t), valuation vectors, and the
//! product formula.
//!
//! Finite-place contributions are kept as `(integer valuation, place)` pairs;
//! a place knows its weight and the symbolic base of its logarithm, and the
//! conversion to floating point happens only in the final sum. Over F_q(t)
//! every term is an integer multiple of `log q`, so the product formula can be
//! checked exactly on integers.
//!
//! Normalizations: over Q every place has weight 1 and `|x|_p = p^(-ord_p x)`.
//! Over F_q(t) a finite place `pi` has weight `deg pi` and
//! `|x|_pi = q^(-ord_pi x)`; the place at infinity has weight 1 and
//! `|x|_inf = q^(deg num - deg den)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{factor_biguint, FiniteField, Poly};
use crate::cyclotomic::ln_bigint;
use crate::error::{Error, Result};

/// Seed for the equal-degree splitting stream used in valuation bookkeeping.
pub const FACTOR_SEED: u64 = 0x5eed_f00d;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Place {
    RationalArchimedean,
    RationalPrime(u64),
    /// A monic irreducible polynomial of F_q[t].
    FunctionFieldFinite { q: u64, pi: Poly },
    FunctionFieldInfinity { q: u64 },
}

impl Place {
    pub fn is_archimedean(&self) -> bool {
        matches!(self, Place::RationalArchimedean)
    }

    /// The weight n_v.
    pub fn weight(&self) -> u64 {
        match self {
            Place::FunctionFieldFinite { pi, .. } => pi.degree().unwrap_or(0) as u64,
            _ => 1,
        }
    }

    /// Natural log of the base b with |x|_v = b^(-ord_v x); 1 for the
    /// archimedean place (where no valuation exists).
    pub fn log_base(&self) -> f64 {
        match self {
            Place::RationalArchimedean => 1.0,
            Place::RationalPrime(p) => (*p as f64).ln(),
            Place::FunctionFieldFinite { q, .. } | Place::FunctionFieldInfinity { q } => (*q as f64).ln(),
        }
    }

    fn sort_key(&self) -> (u8, u64, usize, Vec<u64>) {
        match self {
            Place::RationalArchimedean => (0, 0, 0, vec![]),
            Place::RationalPrime(p) => (1, *p, 0, vec![]),
            Place::FunctionFieldFinite { q, pi } => {
                (2, *q, pi.degree().unwrap_or(0), pi.coeffs().iter().rev().copied().collect())
            }
            Place::FunctionFieldInfinity { q } => (3, *q, 0, vec![]),
        }
    }
}

impl PartialOrd for Place {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Place {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::RationalArchimedean => write!(f, "inf"),
            Place::RationalPrime(p) => write!(f, "{p}"),
            Place::FunctionFieldFinite { pi, .. } => write!(f, "{}", format_poly(pi)),
            Place::FunctionFieldInfinity { .. } => write!(f, "t=inf"),
        }
    }
}

pub(crate) fn format_poly(p: &Poly) -> String {
    let terms: Vec<String> = p
        .coeffs()
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| match (i, c) {
            (0, c) => c.to_string(),
            (1, 1) => "t".to_string(),
            (1, c) => format!("{c}*t"),
            (i, 1) => format!("t^{i}"),
            (i, c) => format!("{c}*t^{i}"),
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

/// A nonzero element of Q or of F_q(t).
#[derive(Clone, Debug)]
pub enum BaseElement {
    Rational(BigRational),
    FunctionField {
        field: Arc<FiniteField>,
        num: Poly,
        den: Poly,
    },
}

impl BaseElement {
    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::domain("zero denominator"));
        }
        Ok(BaseElement::Rational(BigRational::new(num.into(), den.into())))
    }

    /// Reduces `num / den` to lowest terms with a monic denominator.
    pub fn function_field(field: Arc<FiniteField>, num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::domain("zero denominator"));
        }
        let g = field.poly_gcd(&num, &den);
        let (mut num, mut den) = if num.is_zero() {
            (num, Poly::one())
        } else {
            (field.poly_divrem(&num, &g).0, field.poly_divrem(&den, &g).0)
        };
        let lead_inv = field.inv(den.leading())?;
        num = field.poly_scale(&num, lead_inv);
        den = field.poly_scale(&den, lead_inv);
        Ok(BaseElement::FunctionField { field, num, den })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BaseElement::Rational(r) => r.is_zero(),
            BaseElement::FunctionField { num, .. } => num.is_zero(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (BaseElement::Rational(a), BaseElement::Rational(b)) => Ok(BaseElement::Rational(a * b)),
            (
                BaseElement::FunctionField { field, num: n1, den: d1 },
                BaseElement::FunctionField { field: f2, num: n2, den: d2 },
            ) if field == f2 => BaseElement::function_field(
                field.clone(),
                field.poly_mul(n1, n2),
                field.poly_mul(d1, d2),
            ),
            _ => Err(Error::domain("elements of different base fields")),
        }
    }
}

/// Valuations at the finite places in the support, plus `log |x|` at the
/// archimedean place of Q.
#[derive(Clone, Debug, PartialEq)]
pub struct ValuationVector {
    pub valuations: BTreeMap<Place, i64>,
    pub archimedean_log: Option<f64>,
}

impl ValuationVector {
    pub fn archimedean_magnitude(&self) -> Option<f64> {
        self.archimedean_log.map(f64::exp)
    }

    pub fn get(&self, place: &Place) -> i64 {
        self.valuations.get(place).copied().unwrap_or(0)
    }

    /// Componentwise sum (the valuation vector of a product).
    pub fn combine(&self, other: &Self) -> Self {
        let mut valuations = self.valuations.clone();
        for (p, v) in &other.valuations {
            let e = valuations.entry(p.clone()).or_insert(0);
            *e += v;
            if *e == 0 {
                valuations.remove(p);
            }
        }
        let archimedean_log = match (self.archimedean_log, other.archimedean_log) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Self {
            valuations,
            archimedean_log,
        }
    }
}

fn factor_signed(n: &BigInt) -> Result<Vec<(u64, u32)>> {
    let mag: BigUint = n.abs().to_biguint().expect("nonnegative");
    factor_biguint(&mag)?
        .into_iter()
        .map(|(p, e)| {
            p.to_u64()
                .map(|p| (p, e))
                .ok_or_else(|| Error::Resource {
                    message: "prime factor exceeds 64 bits".into(),
                    residue: p.to_string(),
                })
        })
        .collect()
}

pub fn valuation_vector(x: &BaseElement) -> Result<ValuationVector> {
    if x.is_zero() {
        return Err(Error::domain("valuation vector of zero"));
    }
    let mut valuations = BTreeMap::new();
    match x {
        BaseElement::Rational(r) => {
            for (p, e) in factor_signed(r.numer())? {
                *valuations.entry(Place::RationalPrime(p)).or_insert(0) += e as i64;
            }
            for (p, e) in factor_signed(r.denom())? {
                *valuations.entry(Place::RationalPrime(p)).or_insert(0) -= e as i64;
            }
            let log = ln_bigint(&r.numer().abs()) - ln_bigint(r.denom());
            valuations.retain(|_, v| *v != 0);
            Ok(ValuationVector {
                valuations,
                archimedean_log: Some(log),
            })
        }
        BaseElement::FunctionField { field, num, den } => {
            let q = field.order();
            for (pi, e) in field.factor(num, FACTOR_SEED) {
                *valuations.entry(Place::FunctionFieldFinite { q, pi }).or_insert(0) += e as i64;
            }
            for (pi, e) in field.factor(den, FACTOR_SEED) {
                *valuations.entry(Place::FunctionFieldFinite { q, pi }).or_insert(0) -= e as i64;
            }
            let inf = den.degree().unwrap_or(0) as i64 - num.degree().unwrap_or(0) as i64;
            if inf != 0 {
                valuations.insert(Place::FunctionFieldInfinity { q }, inf);
            }
            valuations.retain(|_, v| *v != 0);
            Ok(ValuationVector {
                valuations,
                archimedean_log: None,
            })
        }
    }
}

/// The product formula checked on the integer layer.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactDefect {
    /// `|x| / prod_p p^(ord_p x)`, which is 1 exactly when the formula holds.
    Rational { residual: BigRational },
    /// `sum_v n_v ord_v(x)`, which is 0 exactly when the formula holds.
    FunctionField { degree_sum: i64 },
}

impl ExactDefect {
    pub fn is_zero(&self) -> bool {
        match self {
            ExactDefect::Rational { residual } => residual.is_one(),
            ExactDefect::FunctionField { degree_sum } => *degree_sum == 0,
        }
    }
}

pub fn exact_product_formula(x: &BaseElement) -> Result<ExactDefect> {
    let vv = valuation_vector(x)?;
    match x {
        BaseElement::Rational(r) => {
            let mut rebuilt = BigRational::one();
            for (place, v) in &vv.valuations {
                let Place::RationalPrime(p) = place else { unreachable!() };
                let pk = BigRational::from_integer(BigInt::from(*p).pow(v.unsigned_abs() as u32));
                rebuilt = if *v > 0 { rebuilt * pk } else { rebuilt / pk };
            }
            Ok(ExactDefect::Rational {
                residual: r.abs() / rebuilt,
            })
        }
        BaseElement::FunctionField { .. } => Ok(ExactDefect::FunctionField {
            degree_sum: vv
                .valuations
                .iter()
                .map(|(p, v)| p.weight() as i64 * v)
                .sum(),
        }),
    }
}

/// `sum_v n_v log|x|_v` evaluated in floating point from the valuation vector.
pub fn product_formula_defect(x: &BaseElement) -> Result<f64> {
    let vv = valuation_vector(x)?;
    if let BaseElement::FunctionField { field, .. } = x {
        // every place shares the log base ln q, so sum exactly first
        let total: i64 = vv.valuations.iter().map(|(p, v)| p.weight() as i64 * v).sum();
        return Ok((-total) as f64 * (field.order() as f64).ln());
    }
    let finite: f64 = vv
        .valuations
        .iter()
        .map(|(p, v)| -(p.weight() as f64) * (*v as f64) * p.log_base())
        .sum();
    Ok(vv.archimedean_log.unwrap_or(0.0) + finite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(c: &[u64]) -> Poly {
        Poly::from_coeffs(c.to_vec())
    }

    #[test]
    fn twelve() {
        let vv = valuation_vector(&BaseElement::rational(12, 1).unwrap()).unwrap();
        assert_eq!(vv.get(&Place::RationalPrime(2)), 2);
        assert_eq!(vv.get(&Place::RationalPrime(3)), 1);
        assert_eq!(vv.valuations.len(), 2);
        assert!((vv.archimedean_magnitude().unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn one_has_empty_support() {
        let vv = valuation_vector(&BaseElement::rational(1, 1).unwrap()).unwrap();
        assert!(vv.valuations.is_empty());
        assert_eq!(vv.archimedean_magnitude(), Some(1.0));
    }

    #[test]
    fn zero_is_rejected() {
        assert!(matches!(
            valuation_vector(&BaseElement::rational(0, 1).unwrap()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn function_field_example_over_f2() {
        // (t^2 + t)/(t^3 + 1) = t / (t^2 + t + 1) after cancelling t + 1
        let f2 = Arc::new(FiniteField::prime(2).unwrap());
        let x = BaseElement::function_field(f2.clone(), poly(&[0, 1, 1]), poly(&[1, 0, 0, 1])).unwrap();
        let vv = valuation_vector(&x).unwrap();
        let q = 2;
        assert_eq!(vv.get(&Place::FunctionFieldFinite { q, pi: poly(&[0, 1]) }), 1);
        assert_eq!(vv.get(&Place::FunctionFieldFinite { q, pi: poly(&[1, 1]) }), 0);
        assert_eq!(vv.get(&Place::FunctionFieldFinite { q, pi: poly(&[1, 1, 1]) }), -1);
        assert_eq!(vv.get(&Place::FunctionFieldInfinity { q }), 1);
        assert_eq!(vv.valuations.len(), 3);
        assert!(exact_product_formula(&x).unwrap().is_zero());
    }

    #[test]
    fn product_formula_examples() {
        for (a, b) in [(5, 3), (-7, 1)] {
            let d = product_formula_defect(&BaseElement::rational(a, b).unwrap()).unwrap();
            assert!(d.abs() < 1e-12, "{a}/{b}: {d}");
        }
        let f3 = Arc::new(FiniteField::prime(3).unwrap());
        let x = BaseElement::function_field(f3, poly(&[0, 0, 0, 0, 0, 1]), poly(&[1, 0, 1])).unwrap();
        assert_eq!(
            exact_product_formula(&x).unwrap(),
            ExactDefect::FunctionField { degree_sum: 0 }
        );
        assert_eq!(product_formula_defect(&x).unwrap(), 0.0);
    }

    #[test]
    fn prime_power_constant_field() {
        let f4 = Arc::new(FiniteField::with_order(4).unwrap());
        // t^2 + t + 1 splits over GF(4)
        let x = BaseElement::function_field(f4, poly(&[1, 1, 1]), poly(&[0, 0, 0, 1])).unwrap();
        let vv = valuation_vector(&x).unwrap();
        let linear = vv
            .valuations
            .keys()
            .filter(|p| matches!(p, Place::FunctionFieldFinite { pi, .. } if pi.degree() == Some(1)))
            .count();
        assert_eq!(linear, 3);
        assert!(exact_product_formula(&x).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn rational_homomorphism(a in 1i64..1_000_000, b in 1i64..1_000_000, c in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            prop_assume!(c != 0);
            let x = BaseElement::rational(a, b).unwrap();
            let y = BaseElement::rational(c, d).unwrap();
            let lhs = valuation_vector(&x.mul(&y).unwrap()).unwrap();
            let rhs = valuation_vector(&x).unwrap().combine(&valuation_vector(&y).unwrap());
            prop_assert_eq!(lhs.valuations, rhs.valuations);
            prop_assert!((lhs.archimedean_log.unwrap() - rhs.archimedean_log.unwrap()).abs() < 1e-9);
        }

        #[test]
        fn function_field_degree_sum_vanishes(num in prop::collection::vec(0u64..2, 1..13), den in prop::collection::vec(0u64..2, 1..13)) {
            let f2 = Arc::new(FiniteField::prime(2).unwrap());
            let (n, d) = (poly(&num), poly(&den));
            prop_assume!(!n.is_zero() && !d.is_zero());
            let x = BaseElement::function_field(f2, n, d).unwrap();
            prop_assert_eq!(exact_product_formula(&x).unwrap(), ExactDefect::FunctionField { degree_sum: 0 });
        }
    }
}
