//! Heights of points and monomial curves, correcting integrals, and the
//! smallness functional with its derived diagnostics.
//!
//! Normalizations. `height_point` is the absolute height of one point of
//! the orbit (invariant under field extension). Heights and correcting
//! integrals of cycles are extensive: an orbit of size k contributes k
//! times the point value, a curve of degree a_n is measured against O(1)
//! restricted to it.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::arith::FiniteField;
use crate::cyclotomic::{ln_bigint, rational_to_f64, ring, CyclotomicElement};
use crate::error::{Error, Result};
use crate::measures::genericity_check;
use crate::metrics::{BaseMetric, MetricFamily, SectionSpec};
use crate::points::{
    content_ideal_norm, galois_orbit, Component, CoordField, Coordinates, EffectiveCycle, GaloisOrbit, MonomialCurve,
    ProjectivePoint,
};
use crate::quadrature::{angular_nodes, compensated_sum, radial_integral, radial_nodes, QuadConfig, RadialProfile};

/// `coeff * log(base)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteTerm {
    pub coeff: BigRational,
    pub base: BigInt,
}

impl FiniteTerm {
    pub fn value(&self) -> f64 {
        rational_to_f64(&self.coeff) * ln_bigint(&self.base)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeightValue {
    pub total: f64,
    pub finite_part: Vec<FiniteTerm>,
    pub archimedean: f64,
    pub trace: Vec<String>,
}

fn json_int(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

impl HeightValue {
    fn new(finite_part: Vec<FiniteTerm>, archimedean: f64, trace: Vec<String>) -> Self {
        let finite: f64 = finite_part.iter().map(FiniteTerm::value).sum();
        Self {
            total: finite + archimedean,
            finite_part,
            archimedean,
            trace,
        }
    }

    pub fn finite_value(&self) -> f64 {
        self.finite_part.iter().map(FiniteTerm::value).sum()
    }

    pub fn to_json(&self) -> Value {
        let finite: Vec<Value> = self
            .finite_part
            .iter()
            .map(|t| json!([json_int(t.coeff.numer()), json_int(t.coeff.denom()), json_int(&t.base)]))
            .collect();
        json!({
            "total": self.total,
            "finite_part": finite,
            "archimedean": self.archimedean,
            "trace": self.trace,
        })
    }
}

impl fmt::Display for HeightValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

fn check_dim(m: &MetricFamily, n: usize) -> Result<()> {
    if m.ambient_dim() != n {
        return Err(Error::domain(format!(
            "object in P^{n} measured with a metric on P^{}",
            m.ambient_dim()
        )));
    }
    Ok(())
}

/// Moduli that are the same in every embedding (rational multiples of roots
/// of unity), found once so that torsion coordinates contribute exact values.
fn fixed_moduli(coords: &[CyclotomicElement]) -> Vec<Option<f64>> {
    coords.iter().map(CyclotomicElement::torsion_modulus).collect()
}

fn moduli_at(coords: &[CyclotomicElement], fixed: &[Option<f64>], k: u64) -> Vec<f64> {
    coords
        .iter()
        .zip(fixed)
        .map(|(c, f)| f.unwrap_or_else(|| c.embed_unchecked(k).norm()))
        .collect()
}

/// Average of the archimedean potential over all embeddings of Q(zeta_N).
fn archimedean_average(m: &MetricFamily, p: &ProjectivePoint) -> Result<f64> {
    let n = p.conductor().expect("cyclotomic point");
    let units = ring(n).units();
    let values: Vec<f64> = if m.is_perturbed() {
        units.iter().map(|&k| Ok(m.potential(&p.embed(k)?))).collect::<Result<_>>()?
    } else {
        let coords = p.cyclotomic_coords().expect("cyclotomic point");
        let fixed = fixed_moduli(coords);
        units
            .iter()
            .map(|&k| m.root_potential_abs(&moduli_at(coords, &fixed, k)))
            .collect()
    };
    Ok(compensated_sum(values) / units.len() as f64)
}

/// Height of a point of the orbit, via norm aggregates: the archimedean
/// potential averaged over all embeddings, minus `log N(content)/phi(N)`.
/// Over F_{q^m}(t) the height of a coprime point is `max deg * log q`.
pub fn height_point(m: &MetricFamily, orbit: &GaloisOrbit) -> Result<HeightValue> {
    let p = orbit.representative();
    check_dim(m, p.ambient_dim())?;
    match p.field() {
        CoordField::Rational | CoordField::Cyclotomic(_) => {
            let n = p.conductor().expect("cyclotomic");
            let phi = ring(n).phi();
            let arch = archimedean_average(m, p)?;
            let mut finite = Vec::new();
            if !p.content_norm().is_one() {
                finite.push(FiniteTerm {
                    coeff: BigRational::new(BigInt::from(-1), BigInt::from(phi)),
                    base: p.content_norm().clone(),
                });
            }
            Ok(HeightValue::new(
                finite,
                arch,
                vec![format!("point: norm aggregate over {phi} embeddings, {m}")],
            ))
        }
        CoordField::FunctionField { q, .. } => {
            if m.is_perturbed() {
                return Err(Error::domain("function fields have no archimedean place to perturb"));
            }
            let Coordinates::FunctionField { polys, .. } = p.coordinates() else { unreachable!() };
            let deg = polys.iter().filter_map(|f| f.degree()).max().unwrap_or(0);
            let finite = if deg > 0 {
                vec![FiniteTerm {
                    coeff: BigRational::from_integer(BigInt::from(deg)),
                    base: BigInt::from(q),
                }]
            } else {
                Vec::new()
            };
            Ok(HeightValue::new(finite, 0.0, vec!["point: max degree of coprime coordinates".into()]))
        }
    }
}

/// `(n+1)/2 * sum_{j=2}^{n+1} 1/j`, exactly.
pub fn fs_height_projective_space_exact(n: usize) -> BigRational {
    let sum = (2..=n as i64 + 1).fold(BigRational::zero(), |acc, j| acc + BigRational::new(1.into(), j.into()));
    sum * BigRational::new(BigInt::from(n as i64 + 1), BigInt::from(2))
}

pub fn fs_height_projective_space(n: usize) -> f64 {
    rational_to_f64(&fs_height_projective_space_exact(n))
}

/// `h / ((d+1) deg)`.
pub fn normalized_height(h: f64, dim: usize, degree: u64) -> f64 {
    h / ((dim as f64 + 1.0) * degree as f64)
}

struct CurveTerms {
    root: f64,
    linear: f64,
    energy: f64,
}

const GRADIENT_STEP: f64 = 1e-4;

fn curve_terms(m: &MetricFamily, c: &MonomialCurve, quad: &QuadConfig) -> CurveTerms {
    let profile = RadialProfile::new(c.exponents());
    let an = c.degree() as f64;
    let n = c.ambient_dim();
    let root = match m.root() {
        BaseMetric::Canonical => 0.0,
        BaseMetric::FubiniStudy => {
            // canonical measure on |t| = 1, where all coordinates have modulus 1
            let on_circle = an * 0.5 * ((n + 1) as f64).ln();
            on_circle + radial_integral(&profile, quad, |_, v| v.excess)
        }
    };
    if !m.is_perturbed() {
        return CurveTerms {
            root,
            linear: 0.0,
            energy: 0.0,
        };
    }
    let f = |s: f64, th: f64| m.perturbation_value(&c.point_at(s, th));
    let angles = angular_nodes(quad.angular_order);
    let mean_over = |s: f64, g: &dyn Fn(f64, f64) -> f64| {
        compensated_sum(angles.iter().map(|&th| g(s, th))) / angles.len() as f64
    };
    let linear_measure = match m.root() {
        BaseMetric::Canonical => an * mean_over(0.0, &f),
        BaseMetric::FubiniStudy => radial_integral(&profile, quad, |s, _| mean_over(s, &f)),
    };
    let h = GRADIENT_STEP;
    let grad2 = |s: f64, th: f64| {
        let ds = (f(s + h, th) - f(s - h, th)) / (2.0 * h);
        let dt = (f(s, th + h) - f(s, th - h)) / (2.0 * h);
        ds * ds + dt * dt
    };
    let cutoff = profile.cutoff(quad.tail);
    let energy = -compensated_sum(
        radial_nodes(cutoff, quad.radial_order)
            .into_iter()
            .map(|(s, w)| w * mean_over(s, &grad2)),
    );
    CurveTerms {
        root,
        linear: 2.0 * linear_measure,
        energy,
    }
}

/// Height of a torsion-translated monomial curve.
///
/// Canonical: 0 (the curve is preperiodic under the power maps). Fubini-Study:
/// `h_can + int g (mu_can + mu_FS)` with `g` the Fubini-Study minus canonical
/// potential. Perturbations by `F = sum t f` add `2 int F dmu + int F dd^c F`,
/// the last term being `-(1/2 pi) int |grad F|^2 ds dtheta` in `t = e^{s + i theta}`.
pub fn curve_height(m: &MetricFamily, c: &MonomialCurve, quad: &QuadConfig) -> Result<HeightValue> {
    quad.validate()?;
    check_dim(m, c.ambient_dim())?;
    if m.root() == BaseMetric::Canonical && !m.is_perturbed() {
        return Ok(HeightValue::new(
            Vec::new(),
            0.0,
            vec!["curve: canonical height of a preperiodic curve".into()],
        ));
    }
    let coarse = curve_terms(m, c, quad);
    let fine = curve_terms(m, c, &quad.refined());
    let total = |t: &CurveTerms| t.root + t.linear + t.energy;
    if (total(&coarse) - total(&fine)).abs() > quad.tol {
        return Err(Error::numeric("curve height quadrature did not converge", total(&coarse), total(&fine)));
    }
    let mut trace = vec![format!(
        "curve: telescoping from the canonical height, radial order {}, angular order {}",
        quad.radial_order, quad.angular_order
    )];
    if m.is_perturbed() {
        trace.push(format!(
            "perturbation: root {:.16e}, linear {:.16e}, energy {:.16e}",
            fine.root, fine.linear, fine.energy
        ));
    }
    Ok(HeightValue::new(Vec::new(), total(&fine), trace))
}

/// `int f dmu` for the curvature measure of the unperturbed root metric of `m`.
pub fn curve_integral(m: &MetricFamily, c: &MonomialCurve, quad: &QuadConfig, f: impl Fn(&[Complex64]) -> f64) -> f64 {
    let profile = RadialProfile::new(c.exponents());
    let angles = angular_nodes(quad.angular_order);
    let mean_over = |s: f64| compensated_sum(angles.iter().map(|&th| f(&c.point_at(s, th)))) / angles.len() as f64;
    match m.root() {
        BaseMetric::Canonical => c.degree() as f64 * mean_over(0.0),
        BaseMetric::FubiniStudy => radial_integral(&profile, quad, |s, _| mean_over(s)),
    }
}

fn lift_coords(coords: &[CyclotomicElement], l: u64) -> Result<Vec<CyclotomicElement>> {
    coords.iter().map(|c| c.lift(l)).collect()
}

/// Correcting integral of one point through a section: averages
/// `-(1/n) log|s| + phi` over the embeddings and adds the finite places
/// exactly, `(1/n) log N(s(p)) - log N(content)`.
fn point_correcting_integral(m: &MetricFamily, p: &ProjectivePoint, s: &SectionSpec) -> Result<f64> {
    let coords = p.cyclotomic_coords().expect("cyclotomic point");
    let n_p = p.conductor().expect("cyclotomic");
    let l = n_p.lcm(&s.conductor());
    let lifted = lift_coords(coords, l)?;
    let value = s.eval_cyclotomic(&lifted)?;
    if value.is_zero() {
        return Err(Error::DivisorMembership(format!("{s} vanishes at {p}")));
    }
    let deg = s.degree() as f64;
    let units = ring(l).units();
    let phi_l = units.len() as f64;
    let fixed = if m.is_perturbed() { Vec::new() } else { fixed_moduli(&lifted) };
    let value_fixed = if m.is_perturbed() { None } else { value.torsion_modulus() };
    let terms: Vec<f64> = units
        .iter()
        .map(|&k| {
            if !m.is_perturbed() {
                let sv = value_fixed.unwrap_or_else(|| value.embed_unchecked(k).norm());
                return Ok(-sv.ln() / deg + m.root_potential_abs(&moduli_at(&lifted, &fixed, k)));
            }
            let x: Vec<Complex64> = lifted.iter().map(|c| c.embed(k)).collect::<Result<_>>()?;
            let sv = value.embed(k)?;
            Ok(-sv.norm().ln() / deg + m.potential(&x))
        })
        .collect::<Result<_>>()?;
    let arch = compensated_sum(terms);
    let section_norm = ln_bigint(&content_ideal_norm(&[value])?);
    let degree_ratio = phi_l / ring(n_p).phi() as f64;
    let content = degree_ratio * p.content_lognorm();
    Ok((arch + section_norm / deg - content) / phi_l)
}

fn boundary_points(n: usize) -> Result<(GaloisOrbit, GaloisOrbit)> {
    let mut zero = vec![0i64; n + 1];
    zero[0] = 1;
    let mut inf = vec![0i64; n + 1];
    inf[n] = 1;
    Ok((
        galois_orbit(&ProjectivePoint::rational_ints(&zero)?)?,
        galois_orbit(&ProjectivePoint::rational_ints(&inf)?)?,
    ))
}

/// `I(Y, s) = h(Y) - h(div(s).Y)/deg s`, extensive in Y.
///
/// For an orbit the value is `|O| h(p)` computed through the section (so the
/// product formula is exercised). For a curve and a monomial section `x^e`,
/// `div(x_i).C = a_i [t = 0] + (a_n - a_i) [t = infinity]`.
pub fn correcting_integral(m: &MetricFamily, y: &Component, s: &SectionSpec, quad: &QuadConfig) -> Result<f64> {
    match y {
        Component::Orbit(o) => {
            let p = o.representative();
            check_dim(m, p.ambient_dim())?;
            if s.nvars() != p.ambient_dim() + 1 {
                return Err(Error::domain("section and point live on different spaces"));
            }
            let per_point = match p.coordinates() {
                Coordinates::Cyclotomic(_) => point_correcting_integral(m, p, s)?,
                Coordinates::FunctionField { field, polys } => {
                    let f: &FiniteField = field;
                    if s.eval_poly(f, polys)?.is_zero() {
                        return Err(Error::DivisorMembership(format!("{s} vanishes at {p}")));
                    }
                    height_point(m, o)?.total
                }
            };
            Ok(o.size() as f64 * per_point)
        }
        Component::Curve(c) => {
            check_dim(m, c.ambient_dim())?;
            let e = s.as_monomial().ok_or_else(|| {
                Error::Unsupported("correcting integrals of curves need monomial sections".into())
            })?;
            if e.len() != c.ambient_dim() + 1 {
                return Err(Error::domain("section and curve live on different spaces"));
            }
            let h_curve = curve_height(m, c, quad)?.total;
            let (p0, pinf) = boundary_points(c.ambient_dim())?;
            let (h0, hinf) = (height_point(m, &p0)?.total, height_point(m, &pinf)?.total);
            let an = c.degree() as f64;
            let boundary: f64 = e
                .iter()
                .zip(c.exponents())
                .map(|(&ei, &ai)| ei as f64 * (ai as f64 * h0 + (an - ai as f64) * hinf))
                .sum();
            Ok(h_curve - boundary / s.degree() as f64)
        }
    }
}

/// A finite family of sections approximating the supremum over all sections.
#[derive(Clone, Debug)]
pub struct SectionDictionary {
    sections: Vec<SectionSpec>,
}

impl SectionDictionary {
    /// Every coordinate `x_i` must occur as a pure power in the family, so
    /// that each point and each monomial curve meets some section properly.
    pub fn new(sections: Vec<SectionSpec>) -> Result<Self> {
        let Some(first) = sections.first() else {
            return Err(Error::config("empty section dictionary"));
        };
        let nv = first.nvars();
        if sections.iter().any(|s| s.nvars() != nv) {
            return Err(Error::config("dictionary sections on different spaces"));
        }
        for i in 0..nv {
            let covered = sections
                .iter()
                .any(|s| s.as_monomial().is_some_and(|e| e.iter().enumerate().all(|(j, &k)| (j == i) == (k > 0))));
            if !covered {
                return Err(Error::config(format!("dictionary has no power of x_{i}")));
            }
        }
        Ok(Self { sections })
    }

    pub fn coordinate(n: usize) -> Self {
        Self::new((0..=n).map(|i| SectionSpec::coordinate(i, n)).collect()).expect("valid")
    }

    /// Coordinate sections plus `x_i - zeta_N^k x_j` for `i < j` and all k.
    pub fn with_torsion_differences(n: usize, conductor: u64) -> Result<Self> {
        let mut v: Vec<SectionSpec> = (0..=n).map(|i| SectionSpec::coordinate(i, n)).collect();
        for i in 0..=n {
            for j in i + 1..=n {
                for k in 0..conductor {
                    let mut ei = vec![0; n + 1];
                    ei[i] = 1;
                    let mut ej = vec![0; n + 1];
                    ej[j] = 1;
                    let z = CyclotomicElement::zeta_pow(conductor, k as i64).neg();
                    v.push(SectionSpec::linear(1, vec![(CyclotomicElement::one(conductor), ei), (z, ej)])?);
                }
            }
        }
        Self::new(v)
    }

    pub fn sections(&self) -> &[SectionSpec] {
        &self.sections
    }

    pub fn ambient_dim(&self) -> usize {
        self.sections[0].nvars() - 1
    }
}

fn monomial_sup(root: BaseMetric, e: &[u32]) -> f64 {
    match root {
        BaseMetric::Canonical => 1.0,
        BaseMetric::FubiniStudy => {
            let n: u32 = e.iter().sum();
            e.iter()
                .filter(|&&k| k > 0)
                .map(|&k| (k as f64 / n as f64).powf(k as f64 / 2.0))
                .product()
        }
    }
}

/// Certified upper bound of `sum_v n_v log sup ||s||_v` for the unperturbed
/// root metric (exact for monomial sections).
fn log_sup_aggregate(root: BaseMetric, s: &SectionSpec) -> Result<f64> {
    let l = s.conductor();
    let terms: Vec<(CyclotomicElement, f64)> = s
        .terms()
        .map(|(e, c)| Ok((c.lift(l)?, monomial_sup(root, e))))
        .collect::<Result<_>>()?;
    let units = ring(l).units();
    let arch = compensated_sum(units.iter().map(|&k| {
        terms
            .iter()
            .map(|(c, b)| c.embed(k).map(|z| z.norm() * b).unwrap_or(f64::NAN))
            .sum::<f64>()
            .ln()
    })) / units.len() as f64;
    let coeffs: Vec<CyclotomicElement> = terms.into_iter().map(|(c, _)| c).collect();
    let finite = -ln_bigint(&content_ideal_norm(&coeffs)?) / units.len() as f64;
    Ok(arch + finite)
}

/// Lower bound for `inf sum t f` over P^n(C).
fn perturbation_inf(m: &MetricFamily) -> Result<f64> {
    m.perturbations()
        .iter()
        .map(|(f, t)| {
            let (lo, hi) = f
                .range()
                .ok_or_else(|| Error::Unsupported("perturbation without a recorded bound".into()))?;
            let t = rational_to_f64(t);
            Ok(if t >= 0.0 { t * lo } else { t * hi })
        })
        .sum()
}

/// `min_{s in D} -(1/deg s) sum_v n_v log sup ||s||_v`, a certified lower
/// bound computed from upper bounds of the sup norms.
pub fn dictionary_lower_constant(m: &MetricFamily, d: &SectionDictionary) -> Result<f64> {
    check_dim(m, d.ambient_dim())?;
    let inf = perturbation_inf(m)?;
    let mut best = f64::INFINITY;
    for s in d.sections() {
        let v = -log_sup_aggregate(m.root(), s)? / s.degree() as f64 + inf;
        best = best.min(v);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallnessReport {
    /// `(1/deg Z) sum a_i max_s I(Y_i, s)`; a lower approximation of the
    /// supremum over all sections.
    pub value: f64,
    /// Per component: index of the maximizing section (first on ties) and its value.
    pub choices: Vec<(usize, f64)>,
    pub dictionary_lower_bound: bool,
}

/// The smallness functional over the dictionary.
pub fn smallness_functional(
    m: &MetricFamily,
    z: &EffectiveCycle,
    d: &SectionDictionary,
    quad: &QuadConfig,
) -> Result<SmallnessReport> {
    if z.degree() == 0 {
        return Err(Error::domain("cycle of degree 0"));
    }
    let mut total = 0.0;
    let mut choices = Vec::new();
    for (mult, comp) in z.components() {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in d.sections().iter().enumerate() {
            match correcting_integral(m, comp, s, quad) {
                Ok(v) => {
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((i, v));
                    }
                }
                Err(Error::DivisorMembership(_)) | Err(Error::Unsupported(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let (i, v) = best.ok_or_else(|| Error::DivisorMembership("no dictionary section meets the component properly".into()))?;
        total += *mult as f64 * v;
        choices.push((i, v));
    }
    Ok(SmallnessReport {
        value: total / z.degree() as f64,
        choices,
        dictionary_lower_bound: true,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaCandidate {
    pub label: String,
    /// Dictionary supremum `sum a_i max_s I(Y_i, s)` (not divided by degree).
    pub value: f64,
    pub degree: u64,
}

/// Candidates whose dictionary value is at most `eta * degree`.
pub fn minima_filter(candidates: &[MinimaCandidate], eta: f64) -> Vec<MinimaCandidate> {
    candidates
        .iter()
        .filter(|c| c.value <= eta * c.degree as f64)
        .cloned()
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EssentialMinimumEstimate {
    /// Infimum of the smallness values over the second half of the net.
    pub estimate: f64,
    pub values: Vec<f64>,
    pub genericity: Vec<f64>,
    /// True when the net ended before `stop` members.
    pub partial: bool,
    pub caveats: Vec<String>,
}

/// Running liminf estimate of the smallness functional along a net.
pub fn essential_minimum_upper_estimate(
    m: &MetricFamily,
    net: &mut dyn Iterator<Item = EffectiveCycle>,
    d: &SectionDictionary,
    avoid: &[SectionSpec],
    stop: usize,
    quad: &QuadConfig,
) -> Result<EssentialMinimumEstimate> {
    let members: Vec<EffectiveCycle> = net.take(stop).collect();
    if members.is_empty() {
        return Err(Error::domain("empty net"));
    }
    let genericity = genericity_check(&members, avoid)?;
    let values = members
        .iter()
        .map(|z| smallness_functional(m, z, d, quad).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let tail = &values[values.len() / 2..];
    let estimate = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let mut caveats = vec![
        "dictionary supremum under-approximates the supremum over all sections".to_string(),
        "finite net: the liminf is estimated by the infimum over the second half".to_string(),
    ];
    let partial = members.len() < stop;
    if partial {
        caveats.push(format!("net exhausted after {} of {stop} members", members.len()));
    }
    if genericity.last().is_some_and(|&g| g > 0.0) {
        caveats.push("last member meets the avoid-list: genericity not observed".into());
    }
    Ok(EssentialMinimumEstimate {
        estimate,
        values,
        genericity,
        partial,
        caveats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZhangStatus {
    Pass,
    /// The estimate fell below the reference; since the dictionary value
    /// under-approximates, this is never reported as a violation.
    DictionaryBoundInsufficient,
}

impl fmt::Display for ZhangStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZhangStatus::Pass => write!(f, "PASS"),
            ZhangStatus::DictionaryBoundInsufficient => write!(f, "dictionary bound insufficient"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZhangReport {
    pub status: ZhangStatus,
    pub estimate: f64,
    pub reference: f64,
    pub tol: f64,
}

pub fn zhang_check(estimate: f64, reference: f64, tol: f64) -> ZhangReport {
    let status = if estimate >= reference - tol {
        ZhangStatus::Pass
    } else {
        ZhangStatus::DictionaryBoundInsufficient
    };
    ZhangReport {
        status,
        estimate,
        reference,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adelic::Place;
    use crate::arith::Poly;
    use crate::metrics::parse_function;
    use crate::points::parse_point;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn orbit(s: &str) -> GaloisOrbit {
        galois_orbit(&parse_point(s).unwrap()).unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn point_height_examples() {
        let can = MetricFamily::canonical(1);
        let fs = MetricFamily::fubini_study(1);
        for n in [1u64, 2, 3, 5, 12, 97] {
            let o = galois_orbit(
                &ProjectivePoint::cyclotomic(n, vec![CyclotomicElement::one(n), CyclotomicElement::zeta(n)]).unwrap(),
            )
            .unwrap();
            assert_eq!(height_point(&can, &o).unwrap().total, 0.0);
        }
        assert!((height_point(&can, &orbit("rat:(1,2)")).unwrap().total - LN_2).abs() < 1e-15);
        assert!((height_point(&fs, &orbit("rat:(1,1)")).unwrap().total - 0.5 * LN_2).abs() < 1e-15);
        let h = height_point(&MetricFamily::canonical(2), &orbit("ff:2:1:(1;0,0,1;1,0,0,1)")).unwrap();
        assert_eq!(h.finite_part, vec![FiniteTerm { coeff: q(3, 1), base: 2.into() }]);
        assert!((h.total - 3.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn content_enters_height() {
        // (1+i : 2) over Q(i): content (1+i) of norm 2; h = (1/2)(2 log 2) - (1/2) log 2
        let h = height_point(&MetricFamily::canonical(1), &orbit("cyc:4:(1,1;2)")).unwrap();
        assert!((h.total - 0.5 * LN_2).abs() < 1e-15);
        assert_eq!(h.finite_part.len(), 1);
        // same point as (1 : 1 - i)
        let h2 = height_point(&MetricFamily::canonical(1), &orbit("cyc:4:(1;1,-1)")).unwrap();
        assert!((h.total - h2.total).abs() < 1e-15);
    }

    #[test]
    fn height_json_shape() {
        let h = height_point(&MetricFamily::canonical(1), &orbit("cyc:4:(1,1;2)")).unwrap();
        let v = h.to_json();
        assert_eq!(v["finite_part"], json!([[-1, 2, 2]]));
        assert!(v["trace"].is_array());
    }

    #[test]
    fn fs_projective_space() {
        assert_eq!(fs_height_projective_space_exact(3), q(13, 6));
        assert_eq!(fs_height_projective_space_exact(3) / BigRational::from_integer(4.into()), q(13, 24));
        assert_eq!(fs_height_projective_space_exact(0), q(0, 1));
        assert_eq!(fs_height_projective_space_exact(1), q(1, 2));
    }

    #[test]
    fn veronese_heights() {
        let quad = QuadConfig::default();
        let target = 1.5 + PI / 2.0;
        for (n, k) in [(1u64, [0i64, 0, 0]), (4, [1, 3, 2]), (8, [1, 3, 5])] {
            let c = MonomialCurve::new(&[0, 1, 2, 3], n, &k).unwrap();
            let h = curve_height(&MetricFamily::fubini_study(3), &c, &quad).unwrap().total;
            assert!((h - target).abs() < 1e-9, "{h}");
            assert!((normalized_height(h, 1, 3) - (0.25 + PI / 12.0)).abs() < 1e-9);
            assert_eq!(curve_height(&MetricFamily::canonical(3), &c, &quad).unwrap().total, 0.0);
        }
    }

    #[test]
    fn fs_curve_height_of_a_line() {
        // the line (1 : t) is P^1 itself: h_FS(P^1) = 1/2
        let c = MonomialCurve::standard(&[0, 1]).unwrap();
        let h = curve_height(&MetricFamily::fubini_study(1), &c, &QuadConfig::default()).unwrap().total;
        assert!((h - 0.5).abs() < 1e-10, "{h}");
    }

    #[test]
    fn correcting_integral_examples() {
        let quad = QuadConfig::default();
        let can = MetricFamily::canonical(1);
        let o = Component::Orbit(orbit("cyc:7:(1;0,1)"));
        assert!(correcting_integral(&can, &o, &SectionSpec::coordinate(0, 1), &quad).unwrap().abs() < 1e-14);
        let o = Component::Orbit(orbit("rat:(1,2)"));
        let v = correcting_integral(&can, &o, &SectionSpec::coordinate(1, 1), &quad).unwrap();
        assert!((v - LN_2).abs() < 1e-14);
        let c = Component::Curve(MonomialCurve::new(&[0, 1, 2, 3], 8, &[1, 3, 5]).unwrap());
        let v = correcting_integral(&MetricFamily::fubini_study(3), &c, &SectionSpec::coordinate(3, 3), &quad).unwrap();
        assert!((v - (1.5 + PI / 2.0)).abs() < 1e-9);
        let o = Component::Orbit(orbit("rat:(1,0)"));
        assert!(matches!(
            correcting_integral(&can, &o, &SectionSpec::coordinate(1, 1), &quad),
            Err(Error::DivisorMembership(_))
        ));
    }

    #[test]
    fn section_independence_and_galois_invariance() {
        let quad = QuadConfig::default();
        let m = MetricFamily::perturbed(
            MetricFamily::fubini_study(2),
            Place::RationalArchimedean,
            parse_function("add(re:0:1,logratio:(1,2,1):(1,1,3))").unwrap(),
            q(1, 3),
        )
        .unwrap();
        let sections: Vec<SectionSpec> = ["mono:1,0,0", "mono:0,1,0", "mono:1,1,1", "lin:2:(3,2,0,0);(-1,0,1,1)", "lin:1:(5@1|1,1,0,0);(2,0,0,1)"]
            .iter()
            .map(|s| crate::metrics::parse_section(s).unwrap())
            .collect();
        for pt in ["cyc:5:(1,2;0,1;3)", "cyc:12:(2;1,1;0,0,1)", "rat:(3,5,7)"] {
            let o = orbit(pt);
            let h = o.size() as f64 * height_point(&m, &o).unwrap().total;
            for s in &sections {
                let v = correcting_integral(&m, &Component::Orbit(o.clone()), s, &quad).unwrap();
                assert!((v - h).abs() < 1e-11, "{pt} {s}: {v} vs {h}");
            }
            for p in o.conjugates().unwrap() {
                let o2 = galois_orbit(&p).unwrap();
                let v = correcting_integral(&m, &Component::Orbit(o2), &sections[0], &quad).unwrap();
                assert!((v - h).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn lower_constant_examples() {
        for n in [1usize, 3] {
            let d = SectionDictionary::coordinate(n);
            assert_eq!(dictionary_lower_constant(&MetricFamily::canonical(n), &d).unwrap(), 0.0);
            assert_eq!(dictionary_lower_constant(&MetricFamily::fubini_study(n), &d).unwrap(), 0.0);
        }
        // f = Re(x0 conj x0)/|x|^2 + 1/4 has inf 1/4
        let f = parse_function("add(re:0:0,const:1/4)").unwrap();
        let m = MetricFamily::perturbed(MetricFamily::canonical(1), Place::RationalArchimedean, f, q(1, 2)).unwrap();
        let c = dictionary_lower_constant(&m, &SectionDictionary::coordinate(1)).unwrap();
        assert!((c - 0.125).abs() < 1e-15);
    }

    #[test]
    fn lower_constant_bounds_correcting_integrals() {
        let quad = QuadConfig::default();
        let d = SectionDictionary::with_torsion_differences(1, 3).unwrap();
        let f = parse_function("add(im:0:1,scale(1/2,logratio:(1,3):(2,1)))").unwrap();
        let metrics = vec![
            MetricFamily::canonical(1),
            MetricFamily::fubini_study(1),
            MetricFamily::perturbed(MetricFamily::fubini_study(1), Place::RationalArchimedean, f, q(-2, 3)).unwrap(),
        ];
        for m in &metrics {
            let c = dictionary_lower_constant(m, &d).unwrap();
            for pt in ["rat:(1,2)", "cyc:5:(1;0,1)", "cyc:3:(2;1,1)", "rat:(1,0)", "cyc:6:(1,1;3)"] {
                let o = orbit(pt);
                let size = o.size() as f64;
                for s in d.sections() {
                    if let Ok(v) = correcting_integral(m, &Component::Orbit(o.clone()), s, &quad) {
                        assert!(v >= c * size - 1e-9, "{m} {pt} {s}: {v} < {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn smallness_examples() {
        let quad = QuadConfig::default();
        let d = SectionDictionary::coordinate(1);
        let z = EffectiveCycle::from_orbit(orbit("cyc:11:(1;0,1)"));
        let r = smallness_functional(&MetricFamily::canonical(1), &z, &d, &quad).unwrap();
        assert_eq!(r.value, 0.0);
        let z = EffectiveCycle::from_orbit(orbit("cyc:11:(1;0,1)"));
        let r = smallness_functional(&MetricFamily::fubini_study(1), &z, &d, &quad).unwrap();
        assert!((r.value - 0.5 * LN_2).abs() < 1e-12);
        let c = MonomialCurve::new(&[0, 1, 2, 3], 4, &[1, 0, 3]).unwrap();
        let z = EffectiveCycle::new(1, vec![(1, Component::Curve(c))]).unwrap();
        let r = smallness_functional(&MetricFamily::fubini_study(3), &z, &SectionDictionary::coordinate(3), &quad).unwrap();
        assert!((r.value - (1.5 + PI / 2.0) / 3.0).abs() < 1e-9);
        assert!(r.dictionary_lower_bound);
    }

    #[test]
    fn minima_filter_examples() {
        let cands = vec![
            MinimaCandidate { label: "(1:2)".into(), value: LN_2, degree: 1 },
            MinimaCandidate { label: "(1:z5)".into(), value: 0.0, degree: 4 },
        ];
        assert_eq!(minima_filter(&cands, 0.5).len(), 1);
        assert_eq!(minima_filter(&cands, 0.5)[0].label, "(1:z5)");
        assert!(minima_filter(&cands, -1.0).is_empty());
        assert_eq!(minima_filter(&cands[1..], 0.0).len(), 1);
    }

    #[test]
    fn zhang_examples() {
        assert_eq!(zhang_check(0.0, 0.0, 1e-12).status, ZhangStatus::Pass);
        assert_eq!(zhang_check(-0.1, 0.0, 1e-12).status, ZhangStatus::DictionaryBoundInsufficient);
        assert_eq!(zhang_check(13.0 / 24.0, 13.0 / 24.0, 1e-3).status, ZhangStatus::Pass);
    }

    #[test]
    fn essential_minimum_examples() {
        let quad = QuadConfig::default();
        let primes = [2u64, 3, 5, 7, 11, 13];
        let net = |n: usize| {
            primes.iter().map(move |&p| {
                let pt = ProjectivePoint::cyclotomic(p, vec![CyclotomicElement::one(p); n].into_iter().enumerate().map(|(i, c)| c.mul(&CyclotomicElement::zeta_pow(p, i as i64)).unwrap()).collect()).unwrap();
                EffectiveCycle::from_orbit(galois_orbit(&pt).unwrap())
            })
        };
        let avoid = vec![SectionSpec::coordinate(0, 1)];
        let e = essential_minimum_upper_estimate(&MetricFamily::canonical(1), &mut net(2), &SectionDictionary::coordinate(1), &avoid, 6, &quad).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(e.genericity.iter().all(|&g| g == 0.0));
        let e = essential_minimum_upper_estimate(&MetricFamily::fubini_study(1), &mut net(2), &SectionDictionary::coordinate(1), &avoid, 10, &quad).unwrap();
        assert!((e.estimate - 0.5 * LN_2).abs() < 1e-12);
        assert!(e.partial);
        let curves = [5u64, 7, 11].map(|p| EffectiveCycle::galois_cycle(&MonomialCurve::new(&[0, 1, 2, 3], p, &[1, 2, 4]).unwrap()));
        let e = essential_minimum_upper_estimate(&MetricFamily::canonical(3), &mut curves.into_iter(), &SectionDictionary::coordinate(3), &[], 3, &quad).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn function_field_heights_against_place_enumeration() {
        // sum over places of F_2(t) of n_v log max |p_i|_v, with all monic irreducibles of degree <= 6
        let f2 = FiniteField::prime(2).unwrap();
        let irreducibles: Vec<Poly> = (2u64..128)
            .map(|bits| Poly::from_coeffs((0..7).map(|i| (bits >> i) & 1).collect()))
            .filter(|p| f2.is_irreducible(p))
            .collect();
        let cases = ["ff:2:1:(1;0,0,1;1,0,0,1)", "ff:2:1:(1,1;0,1,1;1,0,1)", "ff:2:1:(0,1,1;1,1,0,1)"];
        for s in cases {
            let o = orbit(s);
            let Coordinates::FunctionField { polys, .. } = o.representative().coordinates() else { panic!() };
            let mut total = polys.iter().filter_map(|p| p.degree()).max().unwrap() as i64;
            for pi in &irreducibles {
                let min_ord = polys.iter().filter(|p| !p.is_zero()).map(|p| f2.poly_valuation(p, pi) as i64).min().unwrap();
                total -= pi.degree().unwrap() as i64 * min_ord;
            }
            let h = height_point(&MetricFamily::canonical(polys.len() - 1), &o).unwrap();
            assert!((h.total - total as f64 * LN_2).abs() < 1e-12, "{s}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn perturbed_point_height_is_affine(n in 1u64..20, a in -5i64..5, b in -5i64..5, c in 1i64..5, t in -6i64..6) {
            let pt = ProjectivePoint::cyclotomic(n, vec![
                CyclotomicElement::from_integers(n, &[c]),
                CyclotomicElement::from_integers(n, &[a, b]),
                CyclotomicElement::zeta(n),
            ]).unwrap();
            let o = galois_orbit(&pt).unwrap();
            let f = parse_function("add(re:0:1,scale(2,im:1:2),logratio:(1,2,3):(3,2,1))").unwrap();
            let base = MetricFamily::fubini_study(2);
            let m = MetricFamily::perturbed(base.clone(), Place::RationalArchimedean, f.clone(), q(t, 12)).unwrap();
            let avg: f64 = o.conjugates().unwrap().iter().map(|p| f.eval(&p.embed(1).unwrap())).sum::<f64>() / o.size() as f64;
            let lhs = height_point(&m, &o).unwrap().total;
            let rhs = height_point(&base, &o).unwrap().total + t as f64 / 12.0 * avg;
            prop_assert!((lhs - rhs).abs() < 1e-12, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn minima_filter_is_monotone(vals in prop::collection::vec((-3.0f64..3.0, 1u64..10), 0..20), e1 in -2.0f64..2.0, e2 in -2.0f64..2.0) {
            let cands: Vec<MinimaCandidate> = vals.iter().enumerate().map(|(i, &(v, d))| MinimaCandidate { label: i.to_string(), value: v, degree: d }).collect();
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let a = minima_filter(&cands, lo);
            let b = minima_filter(&cands, hi);
            prop_assert!(a.iter().all(|x| b.contains(x)));
        }
    }
}
