//! Metrics on O(1) over projective space: canonical, Fubini-Study and
//! archimedean perturbations `||.||' = ||.|| e^{-t f}`, together with the
//! elementary test functions, sections, local norms and metric distances.
//!
//! A metric is described at the archimedean place by its potential
//! `phi(x)`, so that a degree-n section has `-log ||s(x)|| = -log|s(x)| + n phi(x)`.
//! Canonical: `phi = log max|x_i|`. Fubini-Study: `phi = (1/2) log sum|x_i|^2`.
//! A perturbation by `(f, t)` adds `t f` (the n-th tensor power of the
//! perturbed metric carries `e^{-n t f}`). At finite places the canonical and
//! Fubini-Study metrics coincide and perturbations are absent.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adelic::Place;
use crate::arith::{FiniteField, Poly};
use crate::cyclotomic::{rational_to_f64, CyclotomicElement};
use crate::error::{Error, Result};
use crate::points::{parse_rational_str, Coordinates, ProjectivePoint};

/// A term of an elementary function; all are invariant under scaling of
/// the homogeneous coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    /// Re(x_i conj(x_j)) / |x|^2
    Re(usize, usize),
    /// Im(x_i conj(x_j)) / |x|^2
    Im(usize, usize),
    /// log(sum num_k |x_k|^2 / sum den_k |x_k|^2), all weights positive.
    LogRatio { num: Vec<BigRational>, den: Vec<BigRational> },
}

impl Atom {
    fn max_index(&self) -> usize {
        match self {
            Atom::Re(i, j) | Atom::Im(i, j) => *i.max(j),
            Atom::LogRatio { num, .. } => num.len() - 1,
        }
    }

    fn eval(&self, x: &[Complex64], norm2: f64) -> f64 {
        match self {
            Atom::Re(i, j) => (x[*i] * x[*j].conj()).re / norm2,
            Atom::Im(i, j) => (x[*i] * x[*j].conj()).im / norm2,
            Atom::LogRatio { num, den } => {
                let (mut a, mut b) = (0.0, 0.0);
                for (k, z) in x.iter().enumerate() {
                    let m = z.norm_sqr();
                    a += rational_to_f64(&num[k]) * m;
                    b += rational_to_f64(&den[k]) * m;
                }
                (a / b).ln()
            }
        }
    }

    /// Exact range of the atom over P^n.
    fn range(&self) -> (f64, f64) {
        match self {
            Atom::Re(i, j) if i == j => (0.0, 1.0),
            Atom::Re(..) | Atom::Im(..) => (-0.5, 0.5),
            Atom::LogRatio { num, den } => {
                let ratios: Vec<f64> = num
                    .iter()
                    .zip(den)
                    .map(|(a, b)| rational_to_f64(&(a / b)).ln())
                    .collect();
                let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[BigRational]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Atom::Re(i, j) => write!(f, "re:{i}:{j}"),
            Atom::Im(i, j) => write!(f, "im:{i}:{j}"),
            Atom::LogRatio { num, den } => write!(f, "logratio:({}):({})", list(num), list(den)),
        }
    }
}

/// An opaque numeric function for exploratory runs. It must be invariant
/// under scaling of the coordinates; `bound` is a recorded sup-norm bound.
#[derive(Clone)]
pub struct Callback {
    pub name: String,
    pub func: Arc<dyn Fn(&[Complex64]) -> f64 + Send + Sync>,
    pub bound: Option<f64>,
}

impl fmt::Debug for Callback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Callback").field("name", &self.name).field("bound", &self.bound).finish()
    }
}

/// `constant + sum c_k atom_k (+ callback)`, a smooth function on P^n(C).
#[derive(Clone, Debug)]
pub struct ElementaryFunction {
    constant: BigRational,
    terms: Vec<(BigRational, Atom)>,
    callback: Option<Callback>,
}

impl ElementaryFunction {
    pub fn constant(c: BigRational) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
            callback: None,
        }
    }

    pub fn atom(atom: Atom) -> Result<Self> {
        if let Atom::LogRatio { num, den } = &atom {
            if num.len() != den.len() || num.is_empty() {
                return Err(Error::domain("logratio weight lists must have equal nonzero length"));
            }
            if num.iter().chain(den).any(|c| !c.is_positive()) {
                return Err(Error::domain("logratio weights must be positive"));
            }
        }
        Ok(Self {
            constant: BigRational::zero(),
            terms: vec![(BigRational::one(), atom)],
            callback: None,
        })
    }

    pub fn callback(cb: Callback) -> Self {
        Self {
            constant: BigRational::zero(),
            terms: Vec::new(),
            callback: Some(cb),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let callback = match (&self.callback, &other.callback) {
            (Some(_), Some(_)) => return Err(Error::Unsupported("sum of two callbacks".into())),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            constant: &self.constant + &other.constant,
            terms,
            callback,
        })
    }

    pub fn scale(&self, c: &BigRational) -> Result<Self> {
        if self.callback.is_some() && !c.is_one() {
            return Err(Error::Unsupported("scaling a callback".into()));
        }
        Ok(Self {
            constant: &self.constant * c,
            terms: self.terms.iter().map(|(k, a)| (k * c, a.clone())).collect(),
            callback: self.callback.clone(),
        })
    }

    pub fn has_callback(&self) -> bool {
        self.callback.is_some()
    }

    /// Smallest number of coordinates the expression refers to.
    pub fn min_coords(&self) -> usize {
        self.terms.iter().map(|(_, a)| a.max_index() + 1).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[Complex64]) -> f64 {
        let norm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let mut v = rational_to_f64(&self.constant);
        for (c, a) in &self.terms {
            v += rational_to_f64(c) * a.eval(x, norm2);
        }
        if let Some(cb) = &self.callback {
            v += (cb.func)(x);
        }
        v
    }

    /// Certified `[inf, sup]` enclosure (exact for a single atom);
    /// `None` for callbacks without a recorded bound.
    pub fn range(&self) -> Option<(f64, f64)> {
        let c = rational_to_f64(&self.constant);
        let (mut lo, mut hi) = (c, c);
        for (k, a) in &self.terms {
            let (a_lo, a_hi) = a.range();
            let k = rational_to_f64(k);
            if k >= 0.0 {
                lo += k * a_lo;
                hi += k * a_hi;
            } else {
                lo += k * a_hi;
                hi += k * a_lo;
            }
        }
        if let Some(cb) = &self.callback {
            let b = cb.bound?;
            lo -= b;
            hi += b;
        }
        Some((lo, hi))
    }

    /// Recorded bound on sup |f|.
    pub fn sup_norm_bound(&self) -> Option<f64> {
        self.range().map(|(lo, hi)| lo.abs().max(hi.abs()))
    }
}

impl fmt::Display for ElementaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if !self.constant.is_zero() || (self.terms.is_empty() && self.callback.is_none()) {
            parts.push(format!("const:{}", self.constant));
        }
        for (c, a) in &self.terms {
            if c.is_one() {
                parts.push(a.to_string());
            } else {
                parts.push(format!("scale({c},{a})"));
            }
        }
        if let Some(cb) = &self.callback {
            parts.push(format!("callback:{}", cb.name));
        }
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "add({})", parts.join(","))
        }
    }
}

/// Splits at top-level commas (outside parentheses).
fn split_top(s: &str, sep: char) -> Result<Vec<&str>> {
    let mut depth = 0i32;
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::parse(format!("unbalanced parentheses in '{s}'")));
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::parse(format!("unbalanced parentheses in '{s}'")));
    }
    out.push(&s[start..]);
    Ok(out)
}

fn parse_index(s: &str) -> Result<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(format!("bad index '{s}'")));
    }
    s.parse().map_err(|_| Error::parse(format!("bad index '{s}'")))
}

fn parse_weights(s: &str) -> Result<Vec<BigRational>> {
    let body = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::parse(format!("expected '(...)', got '{s}'")))?;
    body.split(',').map(parse_rational_str).collect()
}

/// Parses the prefix expression language:
/// `const:c`, `re:i:j`, `im:i:j`, `logratio:(c0,..):(d0,..)`,
/// `add(e1,e2,...)`, `scale(c,e)`.
pub fn parse_function(s: &str) -> Result<ElementaryFunction> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("add(").and_then(|r| r.strip_suffix(')')) {
        let parts = split_top(inner, ',')?;
        let mut acc = parse_function(parts[0])?;
        for p in &parts[1..] {
            acc = acc.add(&parse_function(p)?)?;
        }
        return Ok(acc);
    }
    if let Some(inner) = s.strip_prefix("scale(").and_then(|r| r.strip_suffix(')')) {
        let parts = split_top(inner, ',')?;
        if parts.len() != 2 {
            return Err(Error::parse("scale takes a coefficient and an expression"));
        }
        return parse_function(parts[1])?.scale(&parse_rational_str(parts[0])?);
    }
    if let Some(c) = s.strip_prefix("const:") {
        return Ok(ElementaryFunction::constant(parse_rational_str(c)?));
    }
    for (prefix, re) in [("re:", true), ("im:", false)] {
        if let Some(rest) = s.strip_prefix(prefix) {
            let (i, j) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(format!("expected {prefix}i:j")))?;
            let (i, j) = (parse_index(i)?, parse_index(j)?);
            return ElementaryFunction::atom(if re { Atom::Re(i, j) } else { Atom::Im(i, j) });
        }
    }
    if let Some(rest) = s.strip_prefix("logratio:") {
        let parts = split_top(rest, ':')?;
        if parts.len() != 2 {
            return Err(Error::parse("expected logratio:(..):(..)"));
        }
        let num = parse_weights(parts[0])?;
        let den = parse_weights(parts[1])?;
        return ElementaryFunction::atom(Atom::LogRatio { num, den }).map_err(|e| Error::parse(e.to_string()));
    }
    Err(Error::parse(format!("unknown function syntax '{s}'")))
}

/// A homogeneous form `sum c_m x^m` with cyclotomic-integer coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionSpec {
    degree: u32,
    terms: BTreeMap<Vec<u32>, CyclotomicElement>,
}

impl SectionSpec {
    pub fn monomial(exponents: &[u32]) -> Result<Self> {
        Self::linear(exponents.iter().sum(), vec![(CyclotomicElement::one(1), exponents.to_vec())])
    }

    /// The coordinate section x_i on P^n.
    pub fn coordinate(i: usize, n: usize) -> Self {
        let mut e = vec![0; n + 1];
        e[i] = 1;
        Self::monomial(&e).expect("valid")
    }

    pub fn linear(degree: u32, terms: Vec<(CyclotomicElement, Vec<u32>)>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::domain("sections must have degree at least 1"));
        }
        let len = terms.first().map(|t| t.1.len()).unwrap_or(0);
        if len < 2 {
            return Err(Error::domain("a section needs at least two variables"));
        }
        let mut map: BTreeMap<Vec<u32>, CyclotomicElement> = BTreeMap::new();
        for (c, e) in terms {
            if e.len() != len {
                return Err(Error::domain("monomials in different numbers of variables"));
            }
            if e.iter().sum::<u32>() != degree {
                return Err(Error::domain(format!("monomial {e:?} is not of degree {degree}")));
            }
            if !c.is_integral() {
                return Err(Error::domain("section coefficients must be integral"));
            }
            let entry = match map.remove(&e) {
                Some(old) => old.add(&c)?,
                None => c,
            };
            if !entry.is_zero() {
                map.insert(e, entry);
            }
        }
        if map.is_empty() {
            return Err(Error::domain("section is identically zero"));
        }
        Ok(Self { degree, terms: map })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.terms.keys().next().map(|e| e.len()).unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &CyclotomicElement)> {
        self.terms.iter()
    }

    /// The exponent vector if the section is `x^e` with coefficient 1.
    pub fn as_monomial(&self) -> Option<&[u32]> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next()?;
        c.is_one().then_some(e.as_slice())
    }

    /// Conductor of the coefficient field.
    pub fn conductor(&self) -> u64 {
        self.terms.values().fold(1u64, |acc, c| acc.lcm(&c.conductor()))
    }

    fn check_vars(&self, n: usize) -> Result<()> {
        if n != self.nvars() {
            return Err(Error::domain(format!(
                "section in {} variables evaluated on {n} coordinates",
                self.nvars()
            )));
        }
        Ok(())
    }

    pub fn eval_cyclotomic(&self, x: &[CyclotomicElement]) -> Result<CyclotomicElement> {
        self.check_vars(x.len())?;
        let l = x.iter().fold(self.conductor(), |acc, c| acc.lcm(&c.conductor()));
        let x: Vec<CyclotomicElement> = x.iter().map(|c| c.lift(l)).collect::<Result<_>>()?;
        let mut acc = CyclotomicElement::zero(l);
        for (e, c) in &self.terms {
            let mut term = c.lift(l)?;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    term = term.mul(&xi.pow(k as u64))?;
                }
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Evaluates with coefficients under the embedding `zeta_L -> e^{2 pi i k/L}`
    /// (L any multiple of the coefficient conductor, k coprime to L).
    pub fn eval_complex(&self, x: &[Complex64], k: u64) -> Result<Complex64> {
        self.check_vars(x.len())?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut term = c.embed(k % c.conductor().max(1))?;
            for (xi, &p) in x.iter().zip(e) {
                term *= xi.powu(p);
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Evaluates over F_{q^m}[t]; coefficients must be rational integers.
    pub fn eval_poly(&self, field: &FiniteField, x: &[Poly]) -> Result<Poly> {
        self.check_vars(x.len())?;
        let mut acc = Poly::zero();
        for (e, c) in &self.terms {
            let c = c
                .as_rational()
                .filter(|r| r.is_integer())
                .ok_or_else(|| Error::Unsupported("cyclotomic coefficients over a function field".into()))?;
            let c = field.from_int(
                (c.to_integer() % BigInt::from(field.characteristic()))
                    .to_i64()
                    .expect("reduced"),
            );
            let mut term = Poly::constant(c);
            for (xi, &p) in x.iter().zip(e) {
                for _ in 0..p {
                    term = field.poly_mul(&term, xi);
                }
            }
            acc = field.poly_add(&acc, &term);
        }
        Ok(acc)
    }

    /// Product of sections (for multiplicativity checks).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut terms = Vec::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let l = c1.conductor().lcm(&c2.conductor());
                terms.push((c1.lift(l)?.mul(&c2.lift(l)?)?, e));
            }
        }
        Self::linear(self.degree + other.degree, terms)
    }
}

fn format_coefficient(c: &CyclotomicElement) -> String {
    match c.as_rational() {
        Some(r) => r.to_string(),
        None => {
            let last = c.coeffs().iter().rposition(|x| !x.is_zero()).unwrap_or(0);
            let body: Vec<String> = c.coeffs()[..=last].iter().map(|x| x.to_string()).collect();
            format!("{}@{}", c.conductor(), body.join("|"))
        }
    }
}

impl fmt::Display for SectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |e: &[u32]| e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        if let Some(e) = self.as_monomial() {
            return write!(f, "mono:{}", join(e));
        }
        let terms: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| format!("({},{})", format_coefficient(c), join(e)))
            .collect();
        write!(f, "lin:{}:{}", self.degree, terms.join(";"))
    }
}

fn parse_u32(s: &str) -> Result<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(format!("bad exponent '{s}'")));
    }
    s.parse().map_err(|_| Error::parse(format!("bad exponent '{s}'")))
}

fn parse_coefficient(s: &str) -> Result<CyclotomicElement> {
    match s.split_once('@') {
        Some((n, body)) => {
            let n: u64 = parse_u32(n)? as u64;
            if n == 0 {
                return Err(Error::parse("conductor must be positive"));
            }
            let c = body.split('|').map(parse_rational_str).collect::<Result<Vec<_>>>()?;
            Ok(CyclotomicElement::from_coeffs(n, c))
        }
        None => Ok(CyclotomicElement::from_rational(1, parse_rational_str(s)?)),
    }
}

/// Parses `mono:e0,e1,...,en` or `lin:deg:(c,e0,...,en);(...)`, where a
/// coefficient `c` is an integer or `N@c0|c1|...` (coefficients of powers
/// of zeta_N, ascending).
pub fn parse_section(s: &str) -> Result<SectionSpec> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("mono:") {
        let e = rest.split(',').map(parse_u32).collect::<Result<Vec<_>>>()?;
        return SectionSpec::monomial(&e).map_err(|e| Error::parse(e.to_string()));
    }
    if let Some(rest) = s.strip_prefix("lin:") {
        let (deg, body) = rest
            .split_once(':')
            .ok_or_else(|| Error::parse("expected lin:deg:(...)"))?;
        let deg = parse_u32(deg)?;
        let terms = body
            .split(';')
            .map(|t| {
                let inner = t
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::parse(format!("expected '(c,e0,...)', got '{t}'")))?;
                let mut parts = inner.split(',');
                let c = parse_coefficient(parts.next().unwrap_or(""))?;
                let e = parts.map(parse_u32).collect::<Result<Vec<_>>>()?;
                Ok((c, e))
            })
            .collect::<Result<Vec<_>>>()?;
        return SectionSpec::linear(deg, terms).map_err(|e| Error::parse(e.to_string()));
    }
    Err(Error::parse(format!("unknown section syntax '{s}'")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseMetric {
    Canonical,
    FubiniStudy,
}

#[derive(Clone, Debug)]
pub enum MetricFamily {
    Canonical { n: usize },
    FubiniStudy { n: usize },
    Perturbed {
        base: Box<MetricFamily>,
        place: Place,
        f: ElementaryFunction,
        t: BigRational,
    },
}

impl MetricFamily {
    pub fn canonical(n: usize) -> Self {
        MetricFamily::Canonical { n }
    }

    pub fn fubini_study(n: usize) -> Self {
        MetricFamily::FubiniStudy { n }
    }

    /// The `(place, f, t)`-perturbation; only archimedean places are supported.
    pub fn perturbed(base: MetricFamily, place: Place, f: ElementaryFunction, t: BigRational) -> Result<Self> {
        if !place.is_archimedean() {
            return Err(Error::Unsupported("non-archimedean perturbations".into()));
        }
        if f.min_coords() > base.ambient_dim() + 1 {
            return Err(Error::domain("function refers to coordinates outside the ambient space"));
        }
        Ok(MetricFamily::Perturbed {
            base: Box::new(base),
            place,
            f,
            t,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            MetricFamily::Canonical { n } | MetricFamily::FubiniStudy { n } => *n,
            MetricFamily::Perturbed { base, .. } => base.ambient_dim(),
        }
    }

    pub fn root(&self) -> BaseMetric {
        match self {
            MetricFamily::Canonical { .. } => BaseMetric::Canonical,
            MetricFamily::FubiniStudy { .. } => BaseMetric::FubiniStudy,
            MetricFamily::Perturbed { base, .. } => base.root(),
        }
    }

    /// The unperturbed metric underneath.
    pub fn root_metric(&self) -> MetricFamily {
        match self.root() {
            BaseMetric::Canonical => MetricFamily::canonical(self.ambient_dim()),
            BaseMetric::FubiniStudy => MetricFamily::fubini_study(self.ambient_dim()),
        }
    }

    /// All archimedean perturbations `(f, t)`, innermost first.
    pub fn perturbations(&self) -> Vec<(&ElementaryFunction, &BigRational)> {
        match self {
            MetricFamily::Perturbed { base, f, t, .. } => {
                let mut v = base.perturbations();
                v.push((f, t));
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn is_perturbed(&self) -> bool {
        matches!(self, MetricFamily::Perturbed { .. })
    }

    /// Sum of the perturbation terms `t f(x)`.
    pub fn perturbation_value(&self, x: &[Complex64]) -> f64 {
        self.perturbations()
            .iter()
            .map(|(f, t)| rational_to_f64(t) * f.eval(x))
            .sum()
    }

    /// Archimedean potential of the unperturbed metric from coordinate moduli.
    pub fn root_potential_abs(&self, moduli: &[f64]) -> f64 {
        match self.root() {
            BaseMetric::Canonical => moduli.iter().copied().fold(0.0, f64::max).ln(),
            BaseMetric::FubiniStudy => {
                let m = moduli.iter().copied().fold(0.0, f64::max);
                let s: f64 = moduli.iter().map(|&r| (r / m) * (r / m)).sum();
                m.ln() + 0.5 * s.ln()
            }
        }
    }

    /// Archimedean potential `phi(x)` including perturbations.
    pub fn potential(&self, x: &[Complex64]) -> f64 {
        let moduli: Vec<f64> = x.iter().map(|z| z.norm()).collect();
        let base = self.root_potential_abs(&moduli);
        if self.is_perturbed() {
            base + self.perturbation_value(x)
        } else {
            base
        }
    }

    fn dim_check(&self, len: usize) -> Result<()> {
        if len != self.ambient_dim() + 1 {
            return Err(Error::domain(format!(
                "point with {len} coordinates in P^{}",
                self.ambient_dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for MetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricFamily::Canonical { n } => write!(f, "canonical(P^{n})"),
            MetricFamily::FubiniStudy { n } => write!(f, "fs(P^{n})"),
            MetricFamily::Perturbed { base, place, f: func, t } => {
                write!(f, "perturbed({base}, {place}, {func}, {t})")
            }
        }
    }
}

/// Value of `||s(p)||_v`.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalNorm {
    Archimedean(f64),
    /// `||s(p)||_v = b^{-ord}` with `b` the base of the place.
    Finite { place: Place, ord: i64 },
}

impl LocalNorm {
    /// `log ||s(p)||_v` in floating point.
    pub fn ln(&self) -> f64 {
        match self {
            LocalNorm::Archimedean(x) => x.ln(),
            LocalNorm::Finite { place, ord } => -(*ord as f64) * place.log_base(),
        }
    }
}

/// Archimedean `||s(x)||` at complex coordinates, with coefficients of `s`
/// embedded by `k`.
pub fn local_norm_archimedean(m: &MetricFamily, s: &SectionSpec, x: &[Complex64], k: u64) -> Result<f64> {
    m.dim_check(x.len())?;
    let value = s.eval_complex(x, k)?;
    if value.norm() == 0.0 {
        return Err(Error::DivisorMembership(format!("{s} vanishes at the point")));
    }
    let n = s.degree() as f64;
    Ok((value.norm().ln() - n * m.potential(x)).exp())
}

fn ord_p(x: &BigInt, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut k = 0;
    while (&x % &p).is_zero() {
        x /= &p;
        k += 1;
    }
    Some(k)
}

fn poly_ord(field: &FiniteField, place: &Place, f: &Poly) -> Option<i64> {
    if f.is_zero() {
        return None;
    }
    match place {
        Place::FunctionFieldFinite { pi, .. } => Some(field.poly_valuation(f, pi) as i64),
        Place::FunctionFieldInfinity { .. } => Some(-(f.degree().expect("nonzero") as i64)),
        _ => unreachable!(),
    }
}

/// `||s(p)||_v` for a point given by its coordinates. At the archimedean
/// place the first embedding is used; at finite places the result is exact
/// valuation data (metric perturbations live only at the archimedean place,
/// and the canonical and Fubini-Study metrics agree at finite places).
pub fn local_norm(m: &MetricFamily, v: &Place, s: &SectionSpec, p: &ProjectivePoint) -> Result<LocalNorm> {
    m.dim_check(p.ambient_dim() + 1)?;
    let deg = s.degree() as i64;
    match (v, p.coordinates()) {
        (Place::RationalArchimedean, Coordinates::Cyclotomic(c)) => {
            let l = c[0].conductor().lcm(&s.conductor());
            let x: Vec<Complex64> = c.iter().map(|e| e.lift(l)?.embed(1)).collect::<Result<_>>()?;
            Ok(LocalNorm::Archimedean(local_norm_archimedean(m, s, &x, 1)?))
        }
        (Place::RationalPrime(q), Coordinates::Cyclotomic(c)) => {
            let ints: Vec<BigInt> = c
                .iter()
                .map(|e| e.as_rational().filter(|r| r.is_integer()).map(|r| r.to_integer()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Unsupported("finite places of cyclotomic fields".into()))?;
            let value = s.eval_cyclotomic(c)?;
            let value = value
                .as_rational()
                .ok_or_else(|| Error::Unsupported("cyclotomic section coefficients at a rational prime".into()))?;
            let ord_s = ord_p(value.numer(), *q)
                .ok_or_else(|| Error::DivisorMembership(format!("{s} vanishes at the point")))?
                - ord_p(value.denom(), *q).unwrap_or(0);
            let min = ints.iter().filter_map(|x| ord_p(x, *q)).min().expect("nonzero point");
            Ok(LocalNorm::Finite {
                place: v.clone(),
                ord: ord_s - deg * min,
            })
        }
        (
            Place::FunctionFieldFinite { q, .. } | Place::FunctionFieldInfinity { q },
            Coordinates::FunctionField { field, polys },
        ) => {
            if field.order() != *q {
                return Err(Error::Unsupported(
                    "places of F_q(t) for points over a proper constant extension".into(),
                ));
            }
            let value = s.eval_poly(field, polys)?;
            let ord_s = poly_ord(field, v, &value)
                .ok_or_else(|| Error::DivisorMembership(format!("{s} vanishes at the point")))?;
            let min = polys.iter().filter_map(|f| poly_ord(field, v, f)).min().expect("nonzero point");
            Ok(LocalNorm::Finite {
                place: v.clone(),
                ord: ord_s - deg * min,
            })
        }
        _ => Err(Error::domain(format!("place {v} does not belong to the field of the point"))),
    }
}

/// Sampling configuration for grid estimates of distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { samples: 4096, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceReport {
    /// Analytic value when available, else the grid estimate.
    pub value: f64,
    pub grid_estimate: f64,
    pub analytic: Option<f64>,
    /// True when `value` is only a grid lower bound.
    pub lower_bound_only: bool,
}

/// Deterministic sample of P^n: standard points, the all-ones point and
/// seeded random points with log-uniform moduli and uniform phases.
pub fn sample_projective_points(n: usize, grid: GridConfig) -> Vec<Vec<Complex64>> {
    let mut pts = Vec::with_capacity(grid.samples + n + 2);
    for i in 0..=n {
        let mut e = vec![Complex64::new(0.0, 0.0); n + 1];
        e[i] = Complex64::new(1.0, 0.0);
        pts.push(e);
    }
    pts.push(vec![Complex64::new(1.0, 0.0); n + 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    for _ in 0..grid.samples {
        let p: Vec<Complex64> = (0..=n)
            .map(|_| {
                let r = (rng.gen_range(-3.0..3.0f64)).exp();
                Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        pts.push(p);
    }
    pts
}

/// `sup |log(||s||_1 / ||s||_2)|` at place `v`, for a coordinate section.
pub fn metric_distance(m1: &MetricFamily, m2: &MetricFamily, v: &Place, grid: GridConfig) -> Result<DistanceReport> {
    if m1.ambient_dim() != m2.ambient_dim() {
        return Err(Error::domain("metrics on different projective spaces"));
    }
    if !v.is_archimedean() {
        return Ok(DistanceReport {
            value: 0.0,
            grid_estimate: 0.0,
            analytic: Some(0.0),
            lower_bound_only: false,
        });
    }
    let n = m1.ambient_dim();
    let grid_estimate = sample_projective_points(n, grid)
        .iter()
        .map(|x| (m1.potential(x) - m2.potential(x)).abs())
        .fold(0.0, f64::max);
    let analytic = analytic_distance(m1, m2);
    Ok(DistanceReport {
        value: analytic.unwrap_or(grid_estimate),
        grid_estimate,
        analytic,
        lower_bound_only: analytic.is_none(),
    })
}

fn analytic_distance(m1: &MetricFamily, m2: &MetricFamily) -> Option<f64> {
    let p1 = m1.perturbations();
    let p2 = m2.perturbations();
    let n = m1.ambient_dim();
    if m1.root() == m2.root() {
        // p1 and p2 share a prefix; the difference is a signed sum of the rest
        let common = p1
            .iter()
            .zip(&p2)
            .take_while(|((f1, t1), (f2, t2))| t1 == t2 && f1.to_string() == f2.to_string() && !f1.has_callback())
            .count();
        let rest: Vec<(&ElementaryFunction, f64)> = p1[common..]
            .iter()
            .map(|(f, t)| (*f, rational_to_f64(t)))
            .chain(p2[common..].iter().map(|(f, t)| (*f, -rational_to_f64(t))))
            .collect();
        return match rest.as_slice() {
            [] => Some(0.0),
            [(f, t)] => f.sup_norm_bound().map(|b| t.abs() * b),
            _ => {
                let first = rest[0].0.to_string();
                if rest.iter().all(|(f, _)| f.to_string() == first && !f.has_callback()) {
                    let t: f64 = rest.iter().map(|(_, t)| t).sum();
                    rest[0].0.sup_norm_bound().map(|b| t.abs() * b)
                } else {
                    None
                }
            }
        };
    }
    // canonical vs Fubini-Study: (1/2) log(sum |x|^2 / max |x|^2) has range [0, log(n+1)/2]
    (p1.is_empty() && p2.is_empty()).then(|| 0.5 * ((n + 1) as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn x0(n: usize) -> SectionSpec {
        SectionSpec::coordinate(0, n)
    }

    #[test]
    fn local_norm_examples() {
        let p = ProjectivePoint::rational_ints(&[1, 2]).unwrap();
        let inf = Place::RationalArchimedean;
        let v = local_norm(&MetricFamily::canonical(1), &inf, &x0(1), &p).unwrap();
        assert_eq!(v, LocalNorm::Archimedean(0.5));
        let p11 = ProjectivePoint::rational_ints(&[1, 1]).unwrap();
        let LocalNorm::Archimedean(v) = local_norm(&MetricFamily::fubini_study(1), &inf, &x0(1), &p11).unwrap() else {
            panic!()
        };
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        let m = MetricFamily::perturbed(
            MetricFamily::canonical(1),
            inf.clone(),
            ElementaryFunction::constant(q(1, 1)),
            q(1, 2),
        )
        .unwrap();
        let LocalNorm::Archimedean(v) = local_norm(&m, &inf, &x0(1), &p).unwrap() else {
            panic!()
        };
        assert!((v - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        // x1 vanishes at (1:0)
        let p10 = ProjectivePoint::rational_ints(&[1, 0]).unwrap();
        assert!(matches!(
            local_norm(&m, &inf, &SectionSpec::coordinate(1, 1), &p10),
            Err(Error::DivisorMembership(_))
        ));
    }

    #[test]
    fn finite_place_norms() {
        // p = (2 : 6), s = x1: |6|_2 / max(|2|_2, |6|_2) but coordinates are normalized to (1:3)
        let p = ProjectivePoint::rational_ints(&[4, 6]).unwrap();
        let s = SectionSpec::coordinate(0, 1);
        let v = local_norm(&MetricFamily::canonical(1), &Place::RationalPrime(2), &s, &p).unwrap();
        assert_eq!(v, LocalNorm::Finite { place: Place::RationalPrime(2), ord: 1 });
        let f2 = Arc::new(FiniteField::prime(2).unwrap());
        let p = ProjectivePoint::function_field_in(
            f2,
            2,
            1,
            vec![Poly::from_coeffs(vec![1]), Poly::from_coeffs(vec![0, 0, 1])],
        )
        .unwrap();
        let s = SectionSpec::coordinate(0, 1);
        let v = local_norm(&MetricFamily::canonical(1), &Place::FunctionFieldInfinity { q: 2 }, &s, &p).unwrap();
        assert_eq!(v, LocalNorm::Finite { place: Place::FunctionFieldInfinity { q: 2 }, ord: 2 });
    }

    #[test]
    fn distance_examples() {
        let inf = Place::RationalArchimedean;
        let d = metric_distance(&MetricFamily::canonical(2), &MetricFamily::canonical(2), &inf, GridConfig::default()).unwrap();
        assert_eq!(d.value, 0.0);
        let f = parse_function("re:0:0").unwrap(); // range [0, 1]
        let m = MetricFamily::perturbed(MetricFamily::canonical(1), inf.clone(), f, q(1, 2)).unwrap();
        let d = metric_distance(&m, &MetricFamily::canonical(1), &inf, GridConfig::default()).unwrap();
        assert_eq!(d.value, 0.5);
        assert!(d.grid_estimate <= 0.5 + 1e-15);
        let d = metric_distance(&MetricFamily::fubini_study(1), &MetricFamily::canonical(1), &inf, GridConfig::default()).unwrap();
        assert!((d.value - 0.5 * 2f64.ln()).abs() < 1e-15);
        // the all-ones sample point attains the maximum
        assert!((d.grid_estimate - 0.5 * 2f64.ln()).abs() < 1e-15);
        let d = metric_distance(&m, &MetricFamily::canonical(1), &Place::RationalPrime(3), GridConfig::default()).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn function_grammar() {
        for s in ["re:0:1", "im:1:0", "const:1/2", "logratio:(1,1):(1,2)", "add(re:0:0,scale(-2,im:0:1),const:3)"] {
            let f = parse_function(s).unwrap();
            let g = parse_function(&f.to_string()).unwrap();
            assert_eq!(f.to_string(), g.to_string(), "{s}");
        }
        let f = parse_function("logratio:(1,1):(1,2)").unwrap();
        let v = f.eval(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert!((v - (2.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(f.range(), Some(((0.5f64).ln(), 0.0)));
        for bad in ["re:0", "logratio:(1,-1):(1,1)", "logratio:(1):(1,1)", "add(re:0:0", "sin:0", "scale(2)"] {
            assert!(parse_function(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn section_grammar() {
        for s in ["mono:1,0,2", "lin:2:(1,2,0);(-1,1,1)", "lin:1:(4@0|1,1,0);(1,0,1)"] {
            let x = parse_section(s).unwrap();
            assert_eq!(parse_section(&x.to_string()).unwrap(), x, "{s}");
        }
        assert_eq!(parse_section("mono:1,0,2").unwrap().degree(), 3);
        for bad in ["mono:", "lin:2:(1,1,0)", "lin:1:(1,1,0);(-1,1,0)", "mono:1;2", "poly:1"] {
            assert!(parse_section(bad).is_err(), "{bad}");
        }
    }

    fn arb_point(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((0.1f64..3.0, 0.0f64..6.28), n + 1)
            .prop_map(|v| v.into_iter().map(|(r, a)| Complex64::from_polar(r, a)).collect())
    }

    fn metrics(n: usize) -> Vec<MetricFamily> {
        let f = parse_function("add(re:0:1,logratio:(1,2,3):(2,1,1),scale(1/3,im:2:1))").unwrap();
        vec![
            MetricFamily::canonical(n),
            MetricFamily::fubini_study(n),
            MetricFamily::perturbed(MetricFamily::fubini_study(n), Place::RationalArchimedean, f, q(-1, 3)).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn scaling_invariance(x in arb_point(2), r in 0.1f64..10.0, a in 0.0f64..6.28) {
            let lambda = Complex64::from_polar(r, a);
            let y: Vec<Complex64> = x.iter().map(|z| z * lambda).collect();
            let s = parse_section("lin:2:(1,2,0,0);(3,0,1,1)").unwrap();
            for m in metrics(2) {
                let (Ok(u), Ok(v)) = (local_norm_archimedean(&m, &s, &x, 1), local_norm_archimedean(&m, &s, &y, 1)) else { continue };
                prop_assert!((u.ln() - v.ln()).abs() < 1e-12);
            }
            let f = parse_function("add(re:0:1,logratio:(1,2,3):(2,1,1),im:2:1)").unwrap();
            prop_assert!((f.eval(&x) - f.eval(&y)).abs() < 1e-12);
        }

        #[test]
        fn section_multiplicativity(x in arb_point(2), e1 in prop::collection::vec(0u32..3, 3), e2 in prop::collection::vec(0u32..3, 3)) {
            prop_assume!(e1.iter().sum::<u32>() > 0 && e2.iter().sum::<u32>() > 0);
            let s1 = SectionSpec::monomial(&e1).unwrap();
            let s2 = SectionSpec::monomial(&e2).unwrap();
            let s12 = s1.mul(&s2).unwrap();
            for m in metrics(2) {
                let a = local_norm_archimedean(&m, &s1, &x, 1).unwrap();
                let b = local_norm_archimedean(&m, &s2, &x, 1).unwrap();
                let ab = local_norm_archimedean(&m, &s12, &x, 1).unwrap();
                prop_assert!((a.ln() + b.ln() - ab.ln()).abs() < 1e-12);
            }
        }

        #[test]
        fn perturbation_composition(x in arb_point(1), t1 in -4i64..4, t2 in -4i64..4) {
            let f = parse_function("add(re:0:1,logratio:(1,2):(3,1))").unwrap();
            let inf = Place::RationalArchimedean;
            let base = MetricFamily::canonical(1);
            let once = MetricFamily::perturbed(base.clone(), inf.clone(), f.clone(), q(t1 + t2, 3)).unwrap();
            let inner = MetricFamily::perturbed(base, inf.clone(), f.clone(), q(t1, 3)).unwrap();
            let twice = MetricFamily::perturbed(inner, inf, f, q(t2, 3)).unwrap();
            let s = SectionSpec::monomial(&[1, 2]).unwrap();
            let a = local_norm_archimedean(&once, &s, &x, 1).unwrap();
            let b = local_norm_archimedean(&twice, &s, &x, 1).unwrap();
            prop_assert!((a.ln() - b.ln()).abs() < 1e-12);
        }

        #[test]
        fn atom_ranges_enclose_values(x in arb_point(2)) {
            for s in ["re:0:0", "re:0:2", "im:1:2", "logratio:(1,2,5):(3,1,1)", "add(re:1:1,scale(-1/2,im:0:1))"] {
                let f = parse_function(s).unwrap();
                let (lo, hi) = f.range().unwrap();
                let v = f.eval(&x);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{} {} not in [{}, {}]", s, v, lo, hi);
            }
        }
    }
}
