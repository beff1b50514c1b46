//! Archimedean curvature measures of orbits and monomial curves, torus
//! character moments with exact Ramanujan-sum oracles, genericity
//! accounting, and nets of torsion cycles.
//!
//! Sample points are unit vectors whose first nonzero coordinate is real
//! and positive, so a character `prod (x_i/|x_i|)^{a_i}` is well defined on
//! them even when `sum a_i != 0`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::Zero;

use crate::arith::{euler_phi, mobius};
use crate::cyclotomic::{ring, CyclotomicElement};
use crate::error::{Error, Result};
use crate::metrics::{BaseMetric, MetricFamily, SectionSpec};
use crate::points::{galois_orbit, Component, Coordinates, EffectiveCycle, GaloisOrbit, MonomialCurve, ProjectivePoint};
use crate::quadrature::{angular_nodes, radial_nodes, QuadConfig, RadialProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureProvenance {
    AtomicOrbit,
    CanonicalCurve,
    FubiniStudyCurve,
    PerturbedCurve,
}

/// A source of weighted sample points, possibly generated lazily.
pub trait MeasureSource {
    fn mass(&self) -> f64;
    fn for_each_atom(&self, f: &mut dyn FnMut(f64, &[Complex64]));
}

/// Scales to a unit vector with first nonzero coordinate real positive.
pub fn normalize_point(x: &[Complex64]) -> Vec<Complex64> {
    let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let lead = x.iter().find(|z| !z.is_zero()).copied().unwrap_or(Complex64::new(1.0, 0.0));
    let phase = lead.conj() / lead.norm();
    x.iter().map(|z| z * phase / norm).collect()
}

#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    atoms: Vec<(f64, Vec<Complex64>)>,
    mass: f64,
    provenance: MeasureProvenance,
    signed: bool,
}

impl EmpiricalMeasure {
    /// Points are normalized here. Unsigned measures need positive weights;
    /// the weights must sum to `mass` within `1e-9` (relative to the mass).
    pub fn new(atoms: Vec<(f64, Vec<Complex64>)>, mass: f64, provenance: MeasureProvenance, signed: bool) -> Result<Self> {
        if !signed && atoms.iter().any(|(w, _)| !(*w > 0.0)) {
            return Err(Error::numeric("nonpositive weight in a positive measure", 0.0, 0.0));
        }
        let total: f64 = atoms.iter().map(|(w, _)| w).sum();
        if (total - mass).abs() > 1e-9 * mass.abs().max(1.0) {
            return Err(Error::numeric("measure weights do not sum to the declared mass", total, mass));
        }
        let atoms = atoms.into_iter().map(|(w, x)| (w, normalize_point(&x))).collect();
        Ok(Self {
            atoms,
            mass,
            provenance,
            signed,
        })
    }

    pub fn atoms(&self) -> &[(f64, Vec<Complex64>)] {
        &self.atoms
    }

    pub fn provenance(&self) -> MeasureProvenance {
        self.provenance
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|(w, _)| w).sum()
    }

    /// `int f dmu`.
    pub fn integrate(&self, f: impl Fn(&[Complex64]) -> f64) -> f64 {
        self.atoms.iter().map(|(w, x)| w * f(x)).sum()
    }
}

impl MeasureSource for EmpiricalMeasure {
    fn mass(&self) -> f64 {
        self.mass
    }

    fn for_each_atom(&self, f: &mut dyn FnMut(f64, &[Complex64])) {
        for (w, x) in &self.atoms {
            f(*w, x);
        }
    }
}

/// Equal weights `1/|O|` at the conjugates of the orbit.
pub fn atomic_measure(o: &GaloisOrbit) -> Result<EmpiricalMeasure> {
    let p = o.representative();
    if p.conductor().is_none() {
        return Err(Error::domain("function-field orbits have no archimedean measure"));
    }
    let w = 1.0 / o.size() as f64;
    let atoms = o
        .reps()
        .iter()
        .map(|&k| Ok((w, p.embed(k)?)))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(atoms, 1.0, MeasureProvenance::AtomicOrbit, false)
}

const LAPLACIAN_STEP: f64 = 1e-3;

/// Radial nodes `(s, weight)` of the Fubini-Study curvature measure.
fn fs_radial(c: &MonomialCurve, quad: &QuadConfig) -> Vec<(f64, f64)> {
    let profile = RadialProfile::new(c.exponents());
    radial_nodes(profile.cutoff(quad.tail), quad.radial_order)
        .into_iter()
        .map(|(s, w)| (s, w * profile.eval(s).d2))
        .collect()
}

fn root_curve_atoms(root: BaseMetric, c: &MonomialCurve, quad: &QuadConfig, f: &mut dyn FnMut(f64, Vec<Complex64>)) {
    let angles = angular_nodes(quad.angular_order);
    let a = angles.len() as f64;
    match root {
        BaseMetric::Canonical => {
            let w = c.degree() as f64 / a;
            for &th in &angles {
                f(w, c.point_at(0.0, th));
            }
        }
        BaseMetric::FubiniStudy => {
            for (s, w) in fs_radial(c, quad) {
                for &th in &angles {
                    f(w / a, c.point_at(s, th));
                }
            }
        }
    }
}

/// The curvature measure of `m` on the curve, of mass `deg C`.
///
/// Canonical: `deg C` times the uniform measure on the image of `|t| = 1`.
/// Fubini-Study: `psi''(s) ds dtheta / 2 pi` on a Gauss-Legendre by trapezoid
/// grid. Perturbations add the signed density `(1/2 pi) Laplacian(F o gamma)`.
pub fn curve_measure(m: &MetricFamily, c: &MonomialCurve, quad: &QuadConfig) -> Result<EmpiricalMeasure> {
    quad.validate()?;
    if m.ambient_dim() != c.ambient_dim() {
        return Err(Error::domain("curve and metric live on different spaces"));
    }
    let mut atoms = Vec::new();
    root_curve_atoms(m.root(), c, quad, &mut |w, x| atoms.push((w, x)));
    let provenance = match (m.root(), m.is_perturbed()) {
        (_, true) => MeasureProvenance::PerturbedCurve,
        (BaseMetric::Canonical, _) => MeasureProvenance::CanonicalCurve,
        (BaseMetric::FubiniStudy, _) => MeasureProvenance::FubiniStudyCurve,
    };
    if m.is_perturbed() {
        let f = |s: f64, th: f64| m.perturbation_value(&c.point_at(s, th));
        let h = LAPLACIAN_STEP;
        let angles = angular_nodes(quad.angular_order);
        let a = angles.len() as f64;
        let profile = RadialProfile::new(c.exponents());
        for (s, w) in radial_nodes(profile.cutoff(quad.tail), quad.radial_order) {
            for &th in &angles {
                let center = f(s, th);
                let lap = (f(s + h, th) + f(s - h, th) + f(s, th + h) + f(s, th - h) - 4.0 * center) / (h * h);
                atoms.push((w * lap / a, c.point_at(s, th)));
            }
        }
    }
    let mass = c.degree() as f64;
    let total: f64 = atoms.iter().map(|(w, _)| w).sum();
    if (total - mass).abs() > 1e-6 {
        return Err(Error::numeric("curve measure mass deviates from the degree", total, mass));
    }
    // renormalize the quadrature deficit so weights sum to the declared mass
    let scale = mass / total;
    let atoms = atoms.into_iter().map(|(w, x)| (w * scale, x)).collect();
    EmpiricalMeasure::new(atoms, mass, provenance, m.is_perturbed())
}

/// The curvature measure of a union of curves, generated on demand.
#[derive(Clone, Debug)]
pub struct CurveFamilyMeasure {
    root: BaseMetric,
    curves: Vec<MonomialCurve>,
    quad: QuadConfig,
}

impl CurveFamilyMeasure {
    pub fn new(m: &MetricFamily, curves: Vec<MonomialCurve>, quad: QuadConfig) -> Result<Self> {
        quad.validate()?;
        if m.is_perturbed() {
            return Err(Error::Unsupported("lazy curve measures for perturbed metrics".into()));
        }
        Ok(Self {
            root: m.root(),
            curves,
            quad,
        })
    }

    pub fn of_cycle(m: &MetricFamily, z: &EffectiveCycle, quad: QuadConfig) -> Result<Self> {
        let curves = z
            .components()
            .iter()
            .map(|(mult, c)| match c {
                Component::Curve(c) if *mult == 1 => Ok(c.clone()),
                _ => Err(Error::domain("expected a reduced cycle of curves")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, curves, quad)
    }
}

impl MeasureSource for CurveFamilyMeasure {
    fn mass(&self) -> f64 {
        self.curves.iter().map(|c| c.degree() as f64).sum()
    }

    fn for_each_atom(&self, f: &mut dyn FnMut(f64, &[Complex64])) {
        for c in &self.curves {
            root_curve_atoms(self.root, c, &self.quad, &mut |w, x| f(w, &normalize_point(&x)));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusMode {
    /// A vanishing coordinate with nonzero exponent is an error.
    Strict,
    /// Characters are extended by 0 off the torus.
    ZeroExtended,
}

#[derive(Default)]
struct ComplexSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier_add(acc: &mut (f64, f64), x: f64) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 += (acc.0 - t) + x;
    } else {
        acc.1 += (x - t) + acc.0;
    }
    acc.0 = t;
}

impl ComplexSum {
    fn add(&mut self, z: Complex64) {
        neumaier_add(&mut self.re, z.re);
        neumaier_add(&mut self.im, z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

fn character(x: &[Complex64], a: &[i64], mode: TorusMode) -> Result<Complex64> {
    let mut v = Complex64::new(1.0, 0.0);
    for (z, &k) in x.iter().zip(a) {
        if k == 0 {
            continue;
        }
        let r = z.norm();
        if r == 0.0 {
            return match mode {
                TorusMode::Strict => Err(Error::domain("character evaluated off the torus")),
                TorusMode::ZeroExtended => Ok(Complex64::zero()),
            };
        }
        v *= (z / r).powi(k as i32);
    }
    Ok(v)
}

/// `sum_j w_j prod_i (x_ji/|x_ji|)^{a_i} / mass`.
pub fn character_moment(mu: &dyn MeasureSource, a: &[i64], mode: TorusMode) -> Result<Complex64> {
    Ok(character_moments(mu, &[a.to_vec()], mode)?[0])
}

/// Several moments in one pass over the atoms.
pub fn character_moments(mu: &dyn MeasureSource, a: &[Vec<i64>], mode: TorusMode) -> Result<Vec<Complex64>> {
    let mut sums: Vec<ComplexSum> = a.iter().map(|_| ComplexSum::default()).collect();
    let mut err = None;
    mu.for_each_atom(&mut |w, x| {
        if err.is_some() {
            return;
        }
        for (acc, ai) in sums.iter_mut().zip(a) {
            if ai.len() != x.len() {
                err = Some(Error::domain("moment vector and point have different lengths"));
                return;
            }
            match character(x, ai, mode) {
                Ok(v) => acc.add(v * w),
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mass = mu.mass();
    Ok(sums.iter().map(|s| s.value() / mass).collect())
}

/// The Ramanujan sum `c_N(a) = sum over primitive N-th roots z of z^a`,
/// as `mu(N/g) phi(N) / phi(N/g)` with `g = gcd(a, N)`.
pub fn ramanujan_sum(n: u64, a: i64) -> i64 {
    let g = (a.unsigned_abs()).gcd(&n);
    let g = if a == 0 { n } else { g };
    mobius(n / g) as i64 * (euler_phi(n) / euler_phi(n / g)) as i64
}

/// `sum_{e in E} [a . e = 0]`: whether a character is trivial along a curve.
fn curve_phase(exponents: &[u64], a: &[i64]) -> i64 {
    exponents.iter().zip(a).map(|(&e, &k)| e as i64 * k).sum()
}

/// Oracle for the normalized moment of the Galois cycle of
/// `(1 : zeta^{e_1} : ... : zeta^{e_n})`: `c_N(sum a_i e_i) / phi(N)`.
pub fn torsion_point_moment_oracle(n: u64, exps: &[u64], a: &[i64]) -> f64 {
    let m: i64 = exps.iter().zip(&a[1..]).map(|(&e, &k)| e as i64 * k).sum();
    ramanujan_sum(n, m.rem_euclid(n as i64)) as f64 / euler_phi(n) as f64
}

/// Oracle for the normalized moment of the Galois cycle of a translated
/// monomial curve with translate exponents `k_i`:
/// `[a . (a_i) = 0] c_N(a . k) / phi(N)`.
pub fn torsion_curve_moment_oracle(n: u64, curve_exps: &[u64], translate: &[u64], a: &[i64]) -> f64 {
    if curve_phase(curve_exps, a) != 0 {
        return 0.0;
    }
    torsion_point_moment_oracle(n, translate, a)
}

fn numerically_zero(z: Complex64, scale: f64) -> bool {
    z.norm() <= 1e-8 * scale.max(1.0)
}

/// Whether the point lies on `div(h)`, decided exactly after a numeric prefilter.
fn point_on_divisor(p: &ProjectivePoint, k: u64, h: &SectionSpec) -> Result<bool> {
    match p.coordinates() {
        Coordinates::Cyclotomic(c) => {
            let l = c[0].conductor().lcm(&h.conductor());
            let kk = (0..l).map(|j| k + j * c[0].conductor()).find(|x| x.gcd(&l) == 1).expect("unit lift");
            let lifted: Vec<CyclotomicElement> = c.iter().map(|e| e.lift(l)).collect::<Result<_>>()?;
            let x: Vec<Complex64> = lifted.iter().map(|e| e.embed(kk)).collect::<Result<_>>()?;
            let scale: f64 = x.iter().map(|z| z.norm()).fold(0.0, f64::max).powi(h.degree() as i32);
            if !numerically_zero(h.eval_complex(&x, kk)?, scale * 1e3) {
                return Ok(false);
            }
            let conj: Vec<CyclotomicElement> = lifted.iter().map(|e| e.galois(kk)).collect::<Result<_>>()?;
            Ok(h.eval_cyclotomic(&conj)?.is_zero())
        }
        Coordinates::FunctionField { field, polys } => {
            let conj = p.conjugate(k)?;
            let Coordinates::FunctionField { polys: cp, .. } = conj.coordinates() else { unreachable!() };
            let _ = polys;
            Ok(h.eval_poly(field, cp)?.is_zero())
        }
    }
}

/// Whether the curve lies in `div(h)`: each power of t in
/// `h(1, z_1 t^{a_1}, ..., z_n t^{a_n})` must have zero coefficient.
pub fn curve_in_divisor(c: &MonomialCurve, h: &SectionSpec) -> Result<bool> {
    if h.nvars() != c.ambient_dim() + 1 {
        return Err(Error::domain("section and curve live on different spaces"));
    }
    let l = c.conductor().lcm(&h.conductor());
    let mut groups: BTreeMap<u64, Vec<(CyclotomicElement, u64)>> = BTreeMap::new();
    for (e, coeff) in h.terms() {
        let power: u64 = e.iter().zip(c.exponents()).map(|(&k, &a)| k as u64 * a).sum();
        let phase: u64 = e
            .iter()
            .enumerate()
            .map(|(i, &k)| k as u64 * c.coefficient(i).exponent * (l / c.conductor()))
            .sum::<u64>()
            % l;
        groups.entry(power).or_default().push((coeff.lift(l)?, phase));
    }
    for terms in groups.values() {
        let numeric: Complex64 = terms
            .iter()
            .map(|(coeff, ph)| coeff.embed(1).unwrap_or_default() * crate::points::RootOfUnity::new(l, *ph as i64).to_complex())
            .sum();
        let scale: f64 = terms.iter().map(|(c, _)| c.embed(1).unwrap_or_default().norm()).sum();
        if !numerically_zero(numeric, scale * 1e3) {
            return Ok(false);
        }
        let mut acc = CyclotomicElement::zero(l);
        for (coeff, ph) in terms {
            acc = acc.add(&coeff.mul(&CyclotomicElement::zeta_pow(l, *ph as i64))?)?;
        }
        if !acc.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per member: the fraction of its degree lying in `div(h)` for some `h` in `avoid`.
pub fn genericity_check(net: &[EffectiveCycle], avoid: &[SectionSpec]) -> Result<Vec<f64>> {
    net.iter()
        .map(|z| {
            if z.degree() == 0 {
                return Err(Error::domain("cycle of degree 0"));
            }
            let mut inside = 0u64;
            for (mult, comp) in z.components() {
                match comp {
                    Component::Orbit(o) => {
                        for &k in o.reps() {
                            let mut hit = false;
                            for h in avoid {
                                if point_on_divisor(o.representative(), k, h)? {
                                    hit = true;
                                    break;
                                }
                            }
                            if hit {
                                inside += mult;
                            }
                        }
                    }
                    Component::Curve(c) => {
                        let mut hit = false;
                        for h in avoid {
                            if curve_in_divisor(c, h)? {
                                hit = true;
                                break;
                            }
                        }
                        if hit {
                            inside += mult * c.degree();
                        }
                    }
                }
            }
            Ok(inside as f64 / z.degree() as f64)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetFamily {
    /// Galois cycles of `(1 : zeta^{e_1} : ... : zeta^{e_n})`.
    TorsionPoints { n: usize },
    /// Galois cycles of `t -> (1 : zeta^{e_1} t^{a_1} : ...)`.
    TorsionMonomialCurves { exponents: Vec<u64> },
}

impl NetFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NetFamily::TorsionPoints { .. } => "torsion-points",
            NetFamily::TorsionMonomialCurves { .. } => "torsion-curves",
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            NetFamily::TorsionPoints { n } => *n,
            NetFamily::TorsionMonomialCurves { exponents } => exponents.len() - 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetConfig {
    pub family: NetFamily,
    pub schedule: Vec<u64>,
    pub avoid: Vec<SectionSpec>,
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(Error::config("empty conductor schedule"));
        }
        if self.schedule[0] == 0 || self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("conductor schedule must be positive and strictly increasing"));
        }
        match &self.family {
            NetFamily::TorsionPoints { n } if *n == 0 => Err(Error::config("ambient dimension must be positive")),
            NetFamily::TorsionMonomialCurves { exponents } => MonomialCurve::standard(exponents)
                .map(|_| ())
                .map_err(|e| Error::config(e.to_string())),
            _ => Ok(()),
        }
    }
}

/// Torsion exponents `e_i = b^{i-1} mod N` with `b = floor(N^{1/n}) + 1`,
/// so that small integer relations among the `e_i` are rare.
pub fn torsion_exponents(n_conductor: u64, count: usize) -> Vec<u64> {
    let mut b = (n_conductor as f64).powf(1.0 / count as f64).floor() as u64;
    while b.pow(count as u32) > n_conductor && b > 1 {
        b -= 1;
    }
    while (b + 1).checked_pow(count as u32).is_some_and(|x| x <= n_conductor) {
        b += 1;
    }
    let b = b + 1;
    let mut out = Vec::with_capacity(count);
    let mut e = 1u64 % n_conductor.max(1);
    for _ in 0..count {
        out.push(e);
        e = (e as u128 * b as u128 % n_conductor.max(1) as u128) as u64;
    }
    out
}

/// The member of the net at conductor N, with its torsion exponents.
pub fn net_member(family: &NetFamily, n_conductor: u64) -> Result<(EffectiveCycle, Vec<u64>)> {
    match family {
        NetFamily::TorsionPoints { n } => {
            let exps = torsion_exponents(n_conductor, *n);
            let mut coords = vec![CyclotomicElement::one(n_conductor)];
            coords.extend(exps.iter().map(|&e| CyclotomicElement::zeta_pow(n_conductor, e as i64)));
            let p = ProjectivePoint::cyclotomic(n_conductor, coords)?;
            Ok((EffectiveCycle::from_orbit(galois_orbit(&p)?), exps))
        }
        NetFamily::TorsionMonomialCurves { exponents } => {
            let exps = torsion_exponents(n_conductor, exponents.len() - 1);
            let k: Vec<i64> = exps.iter().map(|&e| e as i64).collect();
            let c = MonomialCurve::new(exponents, n_conductor, &k)?;
            Ok((EffectiveCycle::galois_cycle(&c), exps))
        }
    }
}

/// Exact normalized moment of the Galois cycle of the net member.
pub fn net_moment_oracle(family: &NetFamily, n_conductor: u64, exps: &[u64], a: &[i64]) -> f64 {
    match family {
        NetFamily::TorsionPoints { .. } => torsion_point_moment_oracle(n_conductor, exps, a),
        NetFamily::TorsionMonomialCurves { exponents } => torsion_curve_moment_oracle(n_conductor, exponents, exps, a),
    }
}

/// Normalized measure of a net member (mass = degree).
pub fn member_measure(m: &MetricFamily, z: &EffectiveCycle, quad: &QuadConfig) -> Result<Box<dyn MeasureSource + Send + Sync>> {
    match z.dimension() {
        0 => {
            let [(1, Component::Orbit(o))] = z.components() else {
                return Err(Error::domain("expected a single Galois orbit"));
            };
            Ok(Box::new(atomic_measure(o)?))
        }
        _ => Ok(Box::new(CurveFamilyMeasure::of_cycle(m, z, *quad)?)),
    }
}

/// Total `phi(N)`, used for orbit-size sanity checks.
pub fn group_order(n: u64) -> usize {
    ring(n).phi()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adelic::Place;
    use crate::metrics::{parse_function, parse_section};
    use crate::points::parse_point;
    use num_rational::BigRational;
    use std::f64::consts::TAU;

    fn orbit(s: &str) -> GaloisOrbit {
        galois_orbit(&parse_point(s).unwrap()).unwrap()
    }

    #[test]
    fn atomic_examples() {
        let mu = atomic_measure(&orbit("cyc:5:(1;0,1)")).unwrap();
        assert_eq!(mu.atoms().len(), 4);
        for (j, (w, x)) in mu.atoms().iter().enumerate() {
            assert_eq!(*w, 0.25);
            let k = (j + 1) as f64;
            let expect = Complex64::from_polar(1.0, TAU * k / 5.0) / 2f64.sqrt();
            assert!((x[1] - expect).norm() < 1e-15);
        }
        assert_eq!(atomic_measure(&orbit("rat:(1,1)")).unwrap().atoms().len(), 1);
        let mu = atomic_measure(&orbit("cyc:8:(1;0,0,1)")).unwrap();
        assert_eq!(mu.atoms().len(), 2);
        assert!((mu.atoms()[0].1[1].im - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((mu.atoms()[1].1[1].im + 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ramanujan_oracle_matches_brute_force() {
        for n in 1..60u64 {
            for a in -70..70i64 {
                let brute: f64 = ring(n)
                    .units()
                    .iter()
                    .map(|&k| (TAU * (k as f64) * (a as f64) / n as f64).cos())
                    .sum();
                assert!((brute - ramanujan_sum(n, a) as f64).abs() < 1e-9, "n={n} a={a}");
            }
        }
    }

    #[test]
    fn moment_examples() {
        for n in [5u64, 7, 101] {
            let mu = atomic_measure(&orbit(&format!("cyc:{n}:(1;0,1)"))).unwrap();
            let m = character_moment(&mu, &[0, 1], TorusMode::Strict).unwrap();
            assert!((m - Complex64::new(-1.0 / (n as f64 - 1.0), 0.0)).norm() < 1e-12);
            assert_eq!(character_moment(&mu, &[0, 0], TorusMode::Strict).unwrap(), Complex64::new(1.0, 0.0));
        }
        let c = MonomialCurve::new(&[0, 1, 2, 3], 7, &[1, 3, 2]).unwrap();
        let mu = curve_measure(&MetricFamily::canonical(3), &c, &QuadConfig::default()).unwrap();
        let z = |k: i64| Complex64::from_polar(1.0, TAU * k as f64 / 7.0);
        let m = character_moment(&mu, &[0, 1, 1, -1], TorusMode::Strict).unwrap();
        assert!((m - z(1) * z(3) / z(2)).norm() < 1e-9);
        let m = character_moment(&mu, &[0, 1, 1, 0], TorusMode::Strict).unwrap();
        assert!(m.norm() < 1e-9);
    }

    #[test]
    fn off_torus_modes() {
        let mu = atomic_measure(&orbit("rat:(1,0)")).unwrap();
        assert!(character_moment(&mu, &[0, 1], TorusMode::Strict).is_err());
        assert_eq!(character_moment(&mu, &[0, 1], TorusMode::ZeroExtended).unwrap(), Complex64::zero());
        assert_eq!(character_moment(&mu, &[1, 0], TorusMode::Strict).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn curve_measure_masses() {
        let quad = QuadConfig::default();
        let line = MonomialCurve::standard(&[0, 1]).unwrap();
        let mu = curve_measure(&MetricFamily::canonical(1), &line, &quad).unwrap();
        assert!((mu.total_weight() - 1.0).abs() < 1e-12);
        assert!(mu.atoms().iter().all(|(_, x)| (x[0].norm() - x[1].norm()).abs() < 1e-15));
        let mu = curve_measure(&MetricFamily::fubini_study(1), &line, &quad).unwrap();
        assert!((mu.total_weight() - 1.0).abs() < 1e-9);
        for exps in [vec![0u64, 1, 2, 3], vec![0, 2, 3], vec![0, 1, 5]] {
            let c = MonomialCurve::new(&exps, 5, &vec![1; exps.len() - 1]).unwrap();
            let n = exps.len() - 1;
            for m in [MetricFamily::canonical(n), MetricFamily::fubini_study(n)] {
                let mu = curve_measure(&m, &c, &quad).unwrap();
                assert!((mu.total_weight() - c.degree() as f64).abs() < 1e-6);
                assert!(mu.atoms().iter().all(|(w, _)| *w > 0.0));
                for (_, x) in mu.atoms() {
                    let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum();
                    assert!((norm - 1.0).abs() < 1e-12);
                }
            }
        }
        let bad = QuadConfig { radial_order: 4, ..quad };
        assert!(matches!(curve_measure(&MetricFamily::fubini_study(1), &line, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn fs_measure_integrates_potential_gap() {
        // int g dmu_FS over the Veronese curve: 3/2 + pi/2 - 3 log 2
        let c = MonomialCurve::standard(&[0, 1, 2, 3]).unwrap();
        let mu = curve_measure(&MetricFamily::fubini_study(3), &c, &QuadConfig::default()).unwrap();
        let g = |x: &[Complex64]| {
            let s: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let m = x.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
            0.5 * (s / m).ln()
        };
        let v = mu.integrate(g);
        let expect = 1.5 + std::f64::consts::PI / 2.0 - 3.0 * std::f64::consts::LN_2;
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
    }

    #[test]
    fn perturbed_moments_are_continuous() {
        let quad = QuadConfig::default();
        let c = MonomialCurve::new(&[0, 1, 2], 3, &[1, 2]).unwrap();
        let f = parse_function("add(re:0:1,logratio:(1,2,1):(2,1,1))").unwrap();
        let base = MetricFamily::fubini_study(2);
        let a = [-1i64, 1, 0];
        let m0 = character_moment(&curve_measure(&base, &c, &quad).unwrap(), &a, TorusMode::Strict).unwrap();
        let mut prev = f64::INFINITY;
        for k in [8i64, 4, 2, 1] {
            let t = BigRational::new(k.into(), 64.into());
            let m = MetricFamily::perturbed(base.clone(), Place::RationalArchimedean, f.clone(), t).unwrap();
            let mu = curve_measure(&m, &c, &quad).unwrap();
            assert!(mu.is_signed());
            let d = (character_moment(&mu, &a, TorusMode::Strict).unwrap() - m0).norm();
            assert!(d <= 4.0 * k as f64 / 64.0, "t={k}/64: {d}");
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn genericity_examples() {
        let x0 = SectionSpec::coordinate(0, 1);
        let net: Vec<EffectiveCycle> = [3u64, 5, 7]
            .iter()
            .map(|&n| net_member(&NetFamily::TorsionPoints { n: 1 }, n).unwrap().0)
            .collect();
        assert_eq!(genericity_check(&net, &[x0]).unwrap(), vec![0.0; 3]);
        let fixed = vec![EffectiveCycle::from_orbit(orbit("rat:(1,1)")); 3];
        let diag = parse_section("lin:1:(1,1,0);(-1,0,1)").unwrap();
        assert_eq!(genericity_check(&fixed, &[diag]).unwrap(), vec![1.0; 3]);
        let h = parse_section("lin:2:(1,1,0,0,1);(-1,0,1,1,0)").unwrap();
        let on = MonomialCurve::new(&[0, 1, 2, 3], 7, &[1, 2, 3]).unwrap();
        let off = MonomialCurve::new(&[0, 1, 2, 3], 7, &[1, 2, 4]).unwrap();
        assert!(curve_in_divisor(&on, &h).unwrap());
        assert!(!curve_in_divisor(&off, &h).unwrap());
        let z = EffectiveCycle::new(1, vec![(1, Component::Curve(on)), (1, Component::Curve(off))]).unwrap();
        assert_eq!(genericity_check(&[z], &[h]).unwrap(), vec![0.5]);
        // a torsion point on x1 - zeta_3 x0
        let o = orbit("cyc:3:(1;0,1)");
        let h = parse_section("lin:1:(3@0|-1,1,0);(1,0,1)").unwrap();
        assert_eq!(genericity_check(&[EffectiveCycle::from_orbit(o)], &[h]).unwrap(), vec![0.5]);
    }

    #[test]
    fn net_oracles_match_measures() {
        let quad = QuadConfig { angular_order: 64, ..QuadConfig::default() };
        let fam = NetFamily::TorsionPoints { n: 2 };
        for n in [7u64, 11, 31] {
            let (z, exps) = net_member(&fam, n).unwrap();
            let mu = member_measure(&MetricFamily::canonical(2), &z, &quad).unwrap();
            for a in [vec![0i64, 1, 0], vec![0, 2, -1], vec![3, 1, 1], vec![0, 0, 0]] {
                let m = character_moment(mu.as_ref(), &a, TorusMode::Strict).unwrap();
                let o = net_moment_oracle(&fam, n, &exps, &a);
                assert!((m - Complex64::new(o, 0.0)).norm() < 1e-12, "N={n} a={a:?}");
            }
        }
        let fam = NetFamily::TorsionMonomialCurves { exponents: vec![0, 1, 2, 3] };
        for n in [5u64, 7, 13] {
            let (z, exps) = net_member(&fam, n).unwrap();
            let mu = member_measure(&MetricFamily::canonical(3), &z, &quad).unwrap();
            for a in [vec![0i64, 1, 1, -1], vec![0, 2, -1, 0], vec![0, 1, 0, 0], vec![0, 3, 0, -1]] {
                let m = character_moment(mu.as_ref(), &a, TorusMode::Strict).unwrap();
                let o = net_moment_oracle(&fam, n, &exps, &a);
                assert!((m - Complex64::new(o, 0.0)).norm() < 1e-9, "N={n} a={a:?}: {m} vs {o}");
            }
        }
    }

    #[test]
    fn torsion_exponent_choice() {
        assert_eq!(torsion_exponents(7, 1), vec![1]);
        assert_eq!(torsion_exponents(10007, 3), vec![1, 22, 484]);
        assert_eq!(torsion_exponents(8, 3), vec![1, 3, 1]);
    }

    #[test]
    fn net_config_validation() {
        let fam = NetFamily::TorsionPoints { n: 1 };
        assert!(NetConfig { family: fam.clone(), schedule: vec![2, 3, 5], avoid: vec![] }.validate().is_ok());
        assert!(NetConfig { family: fam.clone(), schedule: vec![3, 3], avoid: vec![] }.validate().is_err());
        assert!(NetConfig { family: fam, schedule: vec![], avoid: vec![] }.validate().is_err());
    }
}
