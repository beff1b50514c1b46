//! Projective points with rational, cyclotomic or F_{q^m}[t] coordinates,
//! their Galois orbits, torsion-translated monomial curves, and effective
//! cycles built from them.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{FiniteField, Hnf, Poly};
use crate::cyclotomic::{ln_bigint, ring, CyclotomicElement};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoordField {
    Rational,
    Cyclotomic(u64),
    FunctionField { q: u64, m: u32 },
}

#[derive(Clone, Debug)]
pub enum Coordinates {
    /// Rational points use conductor 1.
    Cyclotomic(Vec<CyclotomicElement>),
    FunctionField {
        /// The constant field F_{q^m}.
        field: Arc<FiniteField>,
        polys: Vec<Poly>,
    },
}

#[derive(Clone, Debug)]
pub struct ProjectivePoint {
    field: CoordField,
    coords: Coordinates,
    normalized: bool,
    /// Norm of the content ideal (1 for normalized points).
    content_norm: BigInt,
}

/// Norm of the ideal of Z[zeta_N] generated by integral coordinates, via the
/// HNF of the Z-module spanned by `zeta^j * p_i`.
pub fn content_ideal_norm(coords: &[CyclotomicElement]) -> Result<BigInt> {
    let Some(first) = coords.first() else {
        return Err(Error::domain("empty coordinate list"));
    };
    let n = first.conductor();
    if coords.iter().any(|c| c.conductor() != n) {
        return Err(Error::domain("coordinates live in different cyclotomic fields"));
    }
    if coords.iter().all(|c| c.is_zero()) {
        return Err(Error::domain("all coordinates are zero"));
    }
    let unit = coords.iter().any(|c| {
        c.as_monomial()
            .is_some_and(|(a, _)| a.is_integer() && a.to_integer().abs().is_one())
    });
    if unit {
        return Ok(BigInt::one());
    }
    let r = ring(n);
    let phi = r.phi();
    let mut hnf = Hnf::new(phi);
    for c in coords.iter().filter(|c| !c.is_zero()) {
        let mut v = c
            .to_integer_vec()
            .ok_or_else(|| Error::domain("content ideal needs integral coordinates"))?;
        for _ in 0..phi {
            hnf.insert(&v);
            if hnf.is_unimodular() {
                return Ok(BigInt::one());
            }
            r.shift_integer(&mut v);
        }
    }
    hnf.determinant()
        .ok_or_else(|| Error::domain("rank-deficient content module"))
}

/// `log Norm(I)` for the content ideal I of the coordinates.
pub fn content_ideal_lognorm(coords: &[CyclotomicElement]) -> Result<f64> {
    Ok(ln_bigint(&content_ideal_norm(coords)?))
}

impl ProjectivePoint {
    /// A rational point; coordinates are scaled to coprime integers.
    pub fn rational(coords: &[BigRational]) -> Result<Self> {
        if coords.iter().all(|c| c.is_zero()) {
            return Err(Error::domain("all coordinates are zero"));
        }
        let den = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = coords.iter().map(|c| (c * &den).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        let elems = ints
            .iter()
            .map(|x| CyclotomicElement::from_rational(1, BigRational::from_integer(x / &g)))
            .collect();
        Ok(Self {
            field: CoordField::Rational,
            coords: Coordinates::Cyclotomic(elems),
            normalized: true,
            content_norm: BigInt::one(),
        })
    }

    pub fn rational_ints(coords: &[i64]) -> Result<Self> {
        let c: Vec<BigRational> = coords.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        Self::rational(&c)
    }

    /// A point over Q(zeta_N). Denominators are cleared; the content ideal
    /// is not divided out, only its norm is recorded.
    pub fn cyclotomic(n: u64, coords: Vec<CyclotomicElement>) -> Result<Self> {
        if coords.is_empty() || coords.iter().all(|c| c.is_zero()) {
            return Err(Error::domain("all coordinates are zero"));
        }
        let coords = coords
            .into_iter()
            .map(|c| if c.conductor() == n { Ok(c) } else { c.lift(n) })
            .collect::<Result<Vec<_>>>()?;
        let den = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(&c.denominator_lcm()));
        let scale = BigRational::from_integer(den);
        let coords: Vec<CyclotomicElement> = coords.iter().map(|c| c.scale(&scale)).collect();
        let content_norm = content_ideal_norm(&coords)?;
        Ok(Self {
            field: CoordField::Cyclotomic(n),
            coords: Coordinates::Cyclotomic(coords),
            normalized: false,
            content_norm,
        })
    }

    /// A point over F_{q^m}(t); coordinates are divided by their gcd.
    pub fn function_field(q: u64, m: u32, polys: Vec<Poly>) -> Result<Self> {
        let order = (q as u128).checked_pow(m).filter(|&o| o < (1u128 << 32));
        let Some(order) = order else {
            return Err(Error::domain(format!("constant field of order {q}^{m} too large")));
        };
        let field = Arc::new(FiniteField::with_order(order as u64)?);
        if field.characteristic().pow(field.degree() / m) != q || field.degree() % m != 0 {
            return Err(Error::domain(format!("{q} is not a prime power")));
        }
        Self::function_field_in(field, q, m, polys)
    }

    pub(crate) fn function_field_in(field: Arc<FiniteField>, q: u64, m: u32, polys: Vec<Poly>) -> Result<Self> {
        if polys.iter().all(|p| p.is_zero()) {
            return Err(Error::domain("all coordinates are zero"));
        }
        for p in &polys {
            if p.coeffs().iter().any(|&c| !field.contains(c)) {
                return Err(Error::domain("coefficient outside the constant field"));
            }
        }
        let g = polys.iter().fold(Poly::zero(), |acc, p| field.poly_gcd(&acc, p));
        let polys = polys.iter().map(|p| field.poly_divrem(p, &g).0).collect();
        Ok(Self {
            field: CoordField::FunctionField { q, m },
            coords: Coordinates::FunctionField { field, polys },
            normalized: true,
            content_norm: BigInt::one(),
        })
    }

    pub fn field(&self) -> CoordField {
        self.field
    }

    pub fn coordinates(&self) -> &Coordinates {
        &self.coords
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.coords {
            Coordinates::Cyclotomic(c) => c.len() - 1,
            Coordinates::FunctionField { polys, .. } => polys.len() - 1,
        }
    }

    /// Conductor of the cyclotomic coordinate ring (1 for rational points).
    pub fn conductor(&self) -> Option<u64> {
        match &self.coords {
            Coordinates::Cyclotomic(c) => Some(c[0].conductor()),
            Coordinates::FunctionField { .. } => None,
        }
    }

    pub fn cyclotomic_coords(&self) -> Option<&[CyclotomicElement]> {
        match &self.coords {
            Coordinates::Cyclotomic(c) => Some(c),
            Coordinates::FunctionField { .. } => None,
        }
    }

    pub fn content_norm(&self) -> &BigInt {
        &self.content_norm
    }

    pub fn content_lognorm(&self) -> f64 {
        ln_bigint(&self.content_norm)
    }

    /// Complex coordinates under the embedding zeta -> exp(2 pi i k / N).
    pub fn embed(&self, k: u64) -> Result<Vec<Complex64>> {
        match &self.coords {
            Coordinates::Cyclotomic(c) => c.iter().map(|x| x.embed(k)).collect(),
            Coordinates::FunctionField { .. } => {
                Err(Error::domain("function-field points have no archimedean embedding"))
            }
        }
    }

    /// Coordinate magnitudes under embedding k (exact for monomial coordinates).
    pub fn embed_abs(&self, k: u64) -> Result<Vec<f64>> {
        match &self.coords {
            Coordinates::Cyclotomic(c) => Ok(c.iter().map(|x| x.abs_embed(k)).collect()),
            Coordinates::FunctionField { .. } => {
                Err(Error::domain("function-field points have no archimedean embedding"))
            }
        }
    }

    /// The exact conjugate sigma_k(p) (cyclotomic) or Frob^k(p) (function field).
    pub fn conjugate(&self, k: u64) -> Result<Self> {
        match &self.coords {
            Coordinates::Cyclotomic(c) => {
                let coords = c.iter().map(|x| x.galois(k)).collect::<Result<Vec<_>>>()?;
                Ok(Self {
                    field: self.field,
                    coords: Coordinates::Cyclotomic(coords),
                    normalized: self.normalized,
                    content_norm: self.content_norm.clone(),
                })
            }
            Coordinates::FunctionField { field, polys } => {
                let CoordField::FunctionField { q, .. } = self.field else { unreachable!() };
                let steps = frobenius_steps(field, q) * k as u32;
                Ok(Self {
                    field: self.field,
                    coords: Coordinates::FunctionField {
                        field: field.clone(),
                        polys: polys.iter().map(|p| field.poly_frobenius(p, steps)).collect(),
                    },
                    normalized: self.normalized,
                    content_norm: self.content_norm.clone(),
                })
            }
        }
    }

    /// Exact projective equality by cross-multiplication.
    pub fn projectively_equal(&self, other: &Self) -> Result<bool> {
        match (&self.coords, &other.coords) {
            (Coordinates::Cyclotomic(a), Coordinates::Cyclotomic(b)) if a.len() == b.len() => {
                for i in 0..a.len() {
                    for j in i + 1..a.len() {
                        if a[i].mul(&b[j])? != a[j].mul(&b[i])? {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            (
                Coordinates::FunctionField { field, polys: a },
                Coordinates::FunctionField { polys: b, .. },
            ) if a.len() == b.len() => {
                for i in 0..a.len() {
                    for j in i + 1..a.len() {
                        if field.poly_mul(&a[i], &b[j]) != field.poly_mul(&a[j], &b[i]) {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            _ => Ok(false),
        }
    }
}

fn frobenius_steps(field: &FiniteField, q: u64) -> u32 {
    // q = p^s
    let p = field.characteristic();
    let mut s = 0;
    let mut x = 1;
    while x < q {
        x *= p;
        s += 1;
    }
    s
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.field, &self.coords) {
            (CoordField::Rational, Coordinates::Cyclotomic(c)) => {
                let s: Vec<String> = c
                    .iter()
                    .map(|x| x.as_rational().expect("rational").to_string())
                    .collect();
                write!(f, "rat:({})", s.join(","))
            }
            (CoordField::Cyclotomic(n), Coordinates::Cyclotomic(c)) => {
                let s: Vec<String> = c
                    .iter()
                    .map(|x| {
                        let last = x.coeffs().iter().rposition(|c| !c.is_zero()).unwrap_or(0);
                        x.coeffs()[..=last].iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
                    })
                    .collect();
                write!(f, "cyc:{n}:({})", s.join(";"))
            }
            (CoordField::FunctionField { q, m }, Coordinates::FunctionField { polys, .. }) => {
                let s: Vec<String> = polys
                    .iter()
                    .map(|p| {
                        if p.is_zero() {
                            "0".to_string()
                        } else {
                            p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
                        }
                    })
                    .collect();
                write!(f, "ff:{q}:{m}:({})", s.join(";"))
            }
            _ => unreachable!("field tag and coordinates agree"),
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::parse(format!("bad rational '{s}'"));
    let valid = |t: &str| {
        let t = t.strip_prefix('-').unwrap_or(t);
        !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
    };
    match s.split_once('/') {
        Some((a, b)) => {
            if !valid(a) || !b.bytes().all(|c| c.is_ascii_digit()) || b.is_empty() {
                return Err(bad());
            }
            let num: BigInt = a.parse().map_err(|_| bad())?;
            let den: BigInt = b.parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(num, den))
        }
        None => {
            if !valid(s) {
                return Err(bad());
            }
            Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?))
        }
    }
}

pub(crate) fn parse_rational_str(s: &str) -> Result<BigRational> {
    parse_rational(s)
}

fn parenthesized<'a>(s: &'a str, what: &str) -> Result<&'a str> {
    s.strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::parse(format!("{what}: expected '(...)', got '{s}'")))
}

fn parse_u64(s: &str, what: &str) -> Result<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(format!("{what}: bad integer '{s}'")));
    }
    s.parse().map_err(|_| Error::parse(format!("{what}: bad integer '{s}'")))
}

/// Parses `rat:(c0,c1,...)`, `cyc:N:(poly0;poly1;...)` or `ff:q:m:(f0;f1;...)`.
/// Cyclotomic coordinates are comma lists of rational coefficients of powers
/// of zeta; function-field coordinates are comma lists of encoded F_{q^m}
/// coefficients of powers of t; both ascending.
pub fn parse_point(s: &str) -> Result<ProjectivePoint> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("rat:") {
        let body = parenthesized(rest, "rat")?;
        let coords = body.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
        if coords.len() < 2 {
            return Err(Error::parse("a projective point needs at least two coordinates"));
        }
        return ProjectivePoint::rational(&coords);
    }
    if let Some(rest) = s.strip_prefix("cyc:") {
        let (n, body) = rest
            .split_once(':')
            .ok_or_else(|| Error::parse("cyc: expected cyc:N:(...)"))?;
        let n = parse_u64(n, "conductor")?;
        if n == 0 {
            return Err(Error::parse("conductor must be positive"));
        }
        let body = parenthesized(body, "cyc")?;
        let coords = body
            .split(';')
            .map(|poly| {
                let c = poly.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
                Ok(CyclotomicElement::from_coeffs(n, c))
            })
            .collect::<Result<Vec<_>>>()?;
        if coords.len() < 2 {
            return Err(Error::parse("a projective point needs at least two coordinates"));
        }
        return ProjectivePoint::cyclotomic(n, coords);
    }
    if let Some(rest) = s.strip_prefix("ff:") {
        let mut parts = rest.splitn(3, ':');
        let q = parse_u64(parts.next().unwrap_or(""), "q")?;
        let m = parse_u64(parts.next().unwrap_or(""), "m")?;
        let body = parenthesized(parts.next().unwrap_or(""), "ff")?;
        if m == 0 || m > 32 {
            return Err(Error::parse("extension degree m must be in 1..=32"));
        }
        let polys = body
            .split(';')
            .map(|poly| {
                poly.split(',')
                    .map(|c| parse_u64(c, "coefficient"))
                    .collect::<Result<Vec<_>>>()
                    .map(Poly::from_coeffs)
            })
            .collect::<Result<Vec<_>>>()?;
        if polys.len() < 2 {
            return Err(Error::parse("a projective point needs at least two coordinates"));
        }
        return ProjectivePoint::function_field(q, m as u32, polys);
    }
    Err(Error::parse(format!("unknown point syntax '{s}'")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaloisGroup {
    Trivial,
    /// (Z/N)^x acting by zeta -> zeta^k.
    Units { conductor: u64 },
    /// Powers of the q-Frobenius on F_{q^m}.
    Frobenius { q: u64, m: u32 },
}

impl GaloisGroup {
    pub fn order(&self) -> u64 {
        match self {
            GaloisGroup::Trivial => 1,
            GaloisGroup::Units { conductor } => ring(*conductor).phi() as u64,
            GaloisGroup::Frobenius { m, .. } => *m as u64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GaloisOrbit {
    representative: ProjectivePoint,
    group: GaloisGroup,
    /// Coset representatives (conjugation exponents), ascending.
    reps: Vec<u64>,
    stabilizer: Vec<u64>,
}

impl GaloisOrbit {
    pub fn representative(&self) -> &ProjectivePoint {
        &self.representative
    }

    pub fn group(&self) -> GaloisGroup {
        self.group
    }

    pub fn reps(&self) -> &[u64] {
        &self.reps
    }

    pub fn stabilizer(&self) -> &[u64] {
        &self.stabilizer
    }

    pub fn size(&self) -> usize {
        self.reps.len()
    }

    pub fn conjugates(&self) -> Result<Vec<ProjectivePoint>> {
        self.reps.iter().map(|&k| self.representative.conjugate(k)).collect()
    }
}

fn cross_ratio_close(a: &[Complex64], b: &[Complex64], i0: usize) -> bool {
    let scale = a.iter().chain(b).map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    (0..a.len()).all(|i| (a[i] * b[i0] - a[i0] * b[i]).norm() <= 1e-9 * scale * scale)
}

fn coset_reps(n: u64, units: &[u64], stabilizer: &[u64]) -> Vec<u64> {
    let mut covered = vec![false; n as usize + 1];
    let mut reps = Vec::new();
    for &k in units {
        if covered[k as usize] {
            continue;
        }
        reps.push(k);
        for &h in stabilizer {
            let c = (k as u128 * h as u128 % n as u128) as usize;
            covered[if c == 0 { n as usize } else { c }] = true;
        }
    }
    reps
}

/// The orbit of `p` under Gal(Q(zeta_N)/Q) or the Frobenius of F_{q^m}/F_q,
/// with projectively equal conjugates identified.
pub fn galois_orbit(p: &ProjectivePoint) -> Result<GaloisOrbit> {
    match (p.field(), p.coordinates()) {
        (CoordField::Rational, _) => Ok(GaloisOrbit {
            representative: p.clone(),
            group: GaloisGroup::Trivial,
            reps: vec![1],
            stabilizer: vec![1],
        }),
        (CoordField::Cyclotomic(n), Coordinates::Cyclotomic(coords)) => {
            let units = ring(n).units();
            let i0 = coords.iter().position(|c| !c.is_zero()).expect("nonzero point");
            let monomials: Option<Vec<Option<usize>>> = coords
                .iter()
                .map(|c| if c.is_zero() { Some(None) } else { c.as_monomial().map(|(_, j)| Some(j)) })
                .collect();
            let stabilizer: Vec<u64> = match monomials {
                Some(exps) => {
                    let j0 = exps[i0].expect("nonzero") as i64;
                    let g = exps
                        .iter()
                        .flatten()
                        .fold(n as i64, |acc, &j| acc.gcd(&(j as i64 - j0)));
                    let period = (n as i64 / g.max(1)) as u64;
                    units.iter().copied().filter(|&k| (k - 1) % period == 0).collect()
                }
                None => {
                    let base = p.embed(1)?;
                    let mut stab = Vec::new();
                    for &k in &units {
                        let img = p.embed(k)?;
                        if !cross_ratio_close(&img, &base, i0) {
                            continue;
                        }
                        if p.conjugate(k)?.projectively_equal(p)? {
                            stab.push(k);
                        }
                    }
                    stab
                }
            };
            let reps = coset_reps(n, &units, &stabilizer);
            Ok(GaloisOrbit {
                representative: p.clone(),
                group: GaloisGroup::Units { conductor: n },
                reps,
                stabilizer,
            })
        }
        (CoordField::FunctionField { q, m }, _) => {
            let mut period = m as u64;
            for i in 1..m as u64 {
                if m as u64 % i == 0 && p.conjugate(i)?.projectively_equal(p)? {
                    period = i;
                    break;
                }
            }
            Ok(GaloisOrbit {
                representative: p.clone(),
                group: GaloisGroup::Frobenius { q, m },
                reps: (0..period).collect(),
                stabilizer: (0..m as u64).step_by(period as usize).collect(),
            })
        }
        _ => unreachable!("field tag and coordinates agree"),
    }
}

/// zeta_N^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    pub conductor: u64,
    pub exponent: u64,
}

impl RootOfUnity {
    pub fn new(conductor: u64, exponent: i64) -> Self {
        Self {
            conductor,
            exponent: exponent.rem_euclid(conductor as i64) as u64,
        }
    }

    pub fn to_cyclotomic(&self) -> CyclotomicElement {
        CyclotomicElement::zeta_pow(self.conductor, self.exponent as i64)
    }

    pub fn to_complex(&self) -> Complex64 {
        let (s, c) = crate::cyclotomic::unit_angle(self.exponent % self.conductor, self.conductor);
        Complex64::new(c, s)
    }

    pub fn pow(&self, k: u64) -> Self {
        Self::new(self.conductor, (self.exponent as u128 * k as u128 % self.conductor as u128) as i64)
    }
}

/// The closure of t -> (1 : zeta_1 t^{a_1} : ... : zeta_n t^{a_n}).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialCurve {
    exponents: Vec<u64>,
    conductor: u64,
    translate: Vec<RootOfUnity>,
}

impl MonomialCurve {
    /// `exponents` must start at 0, increase strictly and have gcd 1 (so the
    /// parametrization is birational); `translate[i]` is the exponent k_i of
    /// zeta_i = zeta_N^{k_i} for i = 1..n.
    pub fn new(exponents: &[u64], conductor: u64, translate: &[i64]) -> Result<Self> {
        if exponents.len() < 2 {
            return Err(Error::domain("a monomial curve needs at least two coordinates"));
        }
        if exponents[0] != 0 {
            return Err(Error::domain("the first exponent must be 0"));
        }
        if exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("exponents must be strictly increasing"));
        }
        if exponents.iter().fold(0u64, |g, &a| g.gcd(&a)) != 1 {
            return Err(Error::domain("exponents must have gcd 1"));
        }
        if conductor == 0 {
            return Err(Error::domain("conductor must be positive"));
        }
        if translate.len() != exponents.len() - 1 {
            return Err(Error::domain("need one root of unity per non-constant coordinate"));
        }
        Ok(Self {
            exponents: exponents.to_vec(),
            conductor,
            translate: translate.iter().map(|&k| RootOfUnity::new(conductor, k)).collect(),
        })
    }

    /// The untranslated curve.
    pub fn standard(exponents: &[u64]) -> Result<Self> {
        Self::new(exponents, 1, &vec![0; exponents.len().saturating_sub(1)])
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn translate(&self) -> &[RootOfUnity] {
        &self.translate
    }

    pub fn ambient_dim(&self) -> usize {
        self.exponents.len() - 1
    }

    pub fn degree(&self) -> u64 {
        *self.exponents.last().expect("nonempty")
    }

    /// Coordinate coefficient of coordinate i: 1 for i = 0, zeta_i otherwise.
    pub fn coefficient(&self, i: usize) -> RootOfUnity {
        if i == 0 {
            RootOfUnity::new(self.conductor, 0)
        } else {
            self.translate[i - 1]
        }
    }

    /// The point with parameter t = exp(s + i theta), scaled so its largest
    /// coordinate has modulus 1.
    pub fn point_at(&self, s: f64, theta: f64) -> Vec<Complex64> {
        let top = self.exponents.iter().map(|&a| a as f64 * s).fold(f64::NEG_INFINITY, f64::max);
        self.exponents
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let phase = Complex64::from_polar(1.0, a as f64 * theta);
                self.coefficient(i).to_complex() * phase * (a as f64 * s - top).exp()
            })
            .collect()
    }

    pub fn conjugate(&self, k: u64) -> Self {
        Self {
            exponents: self.exponents.clone(),
            conductor: self.conductor,
            translate: self.translate.iter().map(|z| z.pow(k)).collect(),
        }
    }

    /// Same curve as a set: translates differ by (lambda^{a_i}) for a root of unity lambda.
    pub fn same_curve(&self, other: &Self) -> bool {
        if self.exponents != other.exponents {
            return false;
        }
        let n = self.conductor.lcm(&other.conductor);
        let lift = |z: &RootOfUnity| z.exponent * (n / z.conductor) % n;
        let diffs: Vec<u64> = self
            .translate
            .iter()
            .zip(&other.translate)
            .map(|(a, b)| (lift(b) + n - lift(a)) % n)
            .collect();
        // lambda = zeta_n^j must satisfy j * a_i = diffs[i] (mod n)
        let a1 = self.exponents[1];
        let g = a1.gcd(&n);
        if diffs[0] % g != 0 {
            return false;
        }
        let m = n / g;
        let inv = ((a1 / g) as i64).extended_gcd(&(m as i64)).x.rem_euclid(m as i64) as u128;
        let j0 = ((diffs[0] / g) as u128 * inv % m as u128) as u64;
        (0..g).map(|t| j0 + t * m).any(|j| {
            self.exponents[1..]
                .iter()
                .zip(&diffs)
                .all(|(&a, &d)| (j as u128 * a as u128 % n as u128) as u64 == d)
        })
    }

    /// Conjugation exponents k (ascending, in (Z/N)^x) of the distinct
    /// Galois conjugates.
    pub fn galois_reps(&self) -> Vec<u64> {
        let n = self.conductor;
        let units = ring(n).units();
        let stabilizer: Vec<u64> = units
            .iter()
            .copied()
            .filter(|&k| self.conjugate(k).same_curve(self))
            .collect();
        coset_reps(n, &units, &stabilizer)
    }
}

/// Radial coordinate magnitudes r^{a_i} on the curve (|zeta_i| = 1).
pub fn curve_coordinate_profile(c: &MonomialCurve, r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::domain("radius must be positive"));
    }
    Ok(c.exponents().iter().map(|&a| r.powi(a as i32)).collect())
}

#[derive(Clone, Debug)]
pub enum Component {
    Orbit(GaloisOrbit),
    Curve(MonomialCurve),
}

impl Component {
    pub fn dimension(&self) -> usize {
        match self {
            Component::Orbit(_) => 0,
            Component::Curve(_) => 1,
        }
    }

    pub fn degree(&self) -> u64 {
        match self {
            Component::Orbit(o) => o.size() as u64,
            Component::Curve(c) => c.degree(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EffectiveCycle {
    dimension: usize,
    components: Vec<(u64, Component)>,
    degree: u64,
}

impl EffectiveCycle {
    pub fn new(dimension: usize, components: Vec<(u64, Component)>) -> Result<Self> {
        if dimension > 1 {
            return Err(Error::domain("only cycles of dimension 0 or 1 are supported"));
        }
        if let Some((_, c)) = components.iter().find(|(_, c)| c.dimension() != dimension) {
            return Err(Error::domain(format!(
                "component of dimension {} in a {dimension}-cycle",
                c.dimension()
            )));
        }
        let degree = components.iter().map(|(a, c)| a * c.degree()).sum();
        Ok(Self {
            dimension,
            components,
            degree,
        })
    }

    pub fn from_orbit(orbit: GaloisOrbit) -> Self {
        Self::new(0, vec![(1, Component::Orbit(orbit))]).expect("valid")
    }

    /// The Galois cycle of a monomial curve: its distinct conjugates, each once.
    pub fn galois_cycle(curve: &MonomialCurve) -> Self {
        let comps = curve
            .galois_reps()
            .into_iter()
            .map(|k| (1, Component::Curve(curve.conjugate(k))))
            .collect();
        Self::new(1, comps).expect("valid")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn components(&self) -> &[(u64, Component)] {
        &self.components
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(n: u64, c: &[i64]) -> CyclotomicElement {
        CyclotomicElement::from_integers(n, c)
    }

    #[test]
    fn content_examples() {
        assert!((content_ideal_lognorm(&[cyc(1, &[2]), cyc(1, &[4])]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(content_ideal_lognorm(&[cyc(4, &[1]), cyc(4, &[0, 1])]).unwrap(), 0.0);
        let v = content_ideal_lognorm(&[cyc(4, &[1, 1]), cyc(4, &[2])]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert!(content_ideal_lognorm(&[cyc(4, &[0]), cyc(4, &[0])]).is_err());
    }

    #[test]
    fn content_of_non_principal_looking_ideal() {
        // (3, 1 + 2 zeta_5)? Norm of 1 + 2z over Q(zeta_5) is (2^5 + 1)/(2 + 1) = 11
        let n = content_ideal_norm(&[cyc(5, &[1, 2])]).unwrap();
        assert_eq!(n, BigInt::from(11));
        let n = content_ideal_norm(&[cyc(5, &[1, 2]), cyc(5, &[11])]).unwrap();
        assert_eq!(n, BigInt::from(11));
        let n = content_ideal_norm(&[cyc(5, &[1, 2]), cyc(5, &[3])]).unwrap();
        assert_eq!(n, BigInt::one());
    }

    #[test]
    fn content_invariant_under_units() {
        for n in [3u64, 4, 5, 8, 12] {
            let p = vec![cyc(n, &[1, 1]), cyc(n, &[2]), cyc(n, &[0, 3, 1])];
            let base = content_ideal_norm(&p).unwrap();
            for j in 1..n as i64 {
                let u = CyclotomicElement::zeta_pow(n, j);
                let q: Vec<_> = p.iter().map(|x| x.mul(&u).unwrap()).collect();
                assert_eq!(content_ideal_norm(&q).unwrap(), base, "N={n} j={j}");
            }
        }
    }

    #[test]
    fn orbit_examples() {
        let p = parse_point("cyc:5:(1;0,1)").unwrap();
        assert_eq!(galois_orbit(&p).unwrap().size(), 4);
        let p = parse_point("rat:(1,1)").unwrap();
        assert_eq!(galois_orbit(&p).unwrap().size(), 1);
        let p = parse_point("cyc:8:(1;0,0,1)").unwrap();
        let o = galois_orbit(&p).unwrap();
        assert_eq!(o.size(), 2);
        assert_eq!(o.reps(), &[1, 3]);
    }

    #[test]
    fn orbit_of_non_monomial_point_matches_enumeration() {
        // (1 : zeta + zeta^-1) over Q(zeta_8) has real coordinate sqrt(2): orbit {sqrt2, -sqrt2}
        let z = CyclotomicElement::zeta(8);
        let x = z.add(&CyclotomicElement::zeta_pow(8, -1)).unwrap();
        let p = ProjectivePoint::cyclotomic(8, vec![CyclotomicElement::one(8), x]).unwrap();
        let o = galois_orbit(&p).unwrap();
        assert_eq!(o.size(), 2);
        assert_eq!(o.stabilizer(), &[1, 7]);
    }

    #[test]
    fn orbit_sizes_prime_conductor_and_group_closure() {
        for n in [3u64, 5, 7, 11, 13, 97] {
            let p = ProjectivePoint::cyclotomic(n, vec![CyclotomicElement::one(n), CyclotomicElement::zeta(n)]).unwrap();
            assert_eq!(galois_orbit(&p).unwrap().size() as u64, n - 1);
        }
        for n in 1..=24u64 {
            let p = ProjectivePoint::cyclotomic(n, vec![CyclotomicElement::one(n), CyclotomicElement::zeta_pow(n, 2)]).unwrap();
            let o = galois_orbit(&p).unwrap();
            let order = ring(n).phi() as u64;
            assert_eq!(order % o.size() as u64, 0, "N={n}");
            // every group element maps a conjugate onto some conjugate
            let conj = o.conjugates().unwrap();
            for k in ring(n).units() {
                for c in &conj {
                    let img = c.conjugate(k).unwrap();
                    assert!(conj.iter().any(|d| d.projectively_equal(&img).unwrap()), "N={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn function_field_orbit() {
        // a generator of GF(4) is not fixed by Frobenius: orbit size 2
        let p = parse_point("ff:2:2:(1;0,2)").unwrap();
        assert_eq!(galois_orbit(&p).unwrap().size(), 2);
        let p = parse_point("ff:2:2:(1;0,1)").unwrap();
        assert_eq!(galois_orbit(&p).unwrap().size(), 1);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["rat:(1,2)", "rat:(-3,1/2)", "cyc:4:(1;0,1)", "cyc:5:(1,2;3)", "ff:2:1:(1;0,0,1;1,0,0,1)"] {
            let p = parse_point(s).unwrap();
            let again = parse_point(&p.to_string()).unwrap();
            assert_eq!(p.to_string(), again.to_string());
        }
        assert_eq!(parse_point("rat:(-3,1/2)").unwrap().to_string(), "rat:(-6,1)");
        for bad in ["rat:(1)", "rat:1,2", "rat:(1,,2)", "cyc:0:(1;1)", "cyc:x:(1;1)", "ff:6:1:(1;1)", "foo:(1,2)", "rat:(0,0)", "rat:( 1,2)"] {
            assert!(parse_point(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn curve_basics() {
        let c = MonomialCurve::new(&[0, 1, 2, 3], 8, &[1, 3, 5]).unwrap();
        assert_eq!(c.degree(), 3);
        for z in c.translate() {
            assert!(z.to_cyclotomic().pow(8).is_one());
        }
        assert!(MonomialCurve::new(&[0, 2, 4], 1, &[0, 0]).is_err());
        assert!(MonomialCurve::new(&[0, 2, 1], 1, &[0, 0]).is_err());
        assert_eq!(curve_coordinate_profile(&c, 1.0).unwrap(), vec![1.0; 4]);
        assert_eq!(curve_coordinate_profile(&c, 2.0).unwrap(), vec![1.0, 2.0, 4.0, 8.0]);
        let c2 = MonomialCurve::standard(&[0, 2, 3]).unwrap();
        assert_eq!(curve_coordinate_profile(&c2, 0.5).unwrap(), vec![1.0, 0.25, 0.125]);
        assert!(curve_coordinate_profile(&c, 0.0).is_err());
    }

    #[test]
    fn curve_conjugates() {
        // translates (zeta, zeta^2, zeta^3) are the image of t -> zeta t: the standard curve
        let c = MonomialCurve::new(&[0, 1, 2, 3], 5, &[1, 2, 3]).unwrap();
        assert!(c.same_curve(&MonomialCurve::new(&[0, 1, 2, 3], 5, &[0, 0, 0]).unwrap()));
        assert_eq!(c.galois_reps(), vec![1]);
        let c = MonomialCurve::new(&[0, 1, 2, 3], 5, &[0, 0, 1]).unwrap();
        assert_eq!(c.galois_reps().len(), 4);
        let z = EffectiveCycle::galois_cycle(&c);
        assert_eq!(z.degree(), 12);
    }
}
