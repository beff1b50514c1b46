//! Gauss-Legendre rules and the radial profile of a monomial curve.
//!
//! On `t -> (1 : z_1 t^{a_1} : ... : z_n t^{a_n})` with `|z_i| = 1` and
//! `t = e^{s + i theta}`, the Fubini-Study potential is
//! `psi(s) = (1/2) log sum_i e^{2 a_i s}`, radial in `t`. Its curvature
//! measure is `psi''(s) ds dtheta / 2 pi`, of total mass `a_n`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// `psi`, `psi'` and `psi''` of `(1/2) log sum_i e^{2 a_i s}`, computed
/// with the largest exponential factored out.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    exponents: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct ProfileValue {
    pub psi: f64,
    /// `psi - max_i a_i s`, the Fubini-Study minus canonical potential.
    pub excess: f64,
    pub d1: f64,
    pub d2: f64,
}

impl RadialProfile {
    pub fn new(exponents: &[u64]) -> Self {
        Self {
            exponents: exponents.iter().map(|&a| a as f64).collect(),
        }
    }

    pub fn degree(&self) -> f64 {
        *self.exponents.last().expect("nonempty")
    }

    pub fn eval(&self, s: f64) -> ProfileValue {
        let top = self.exponents.iter().map(|a| a * s).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for &a in &self.exponents {
            let w = (2.0 * (a * s - top)).exp();
            z += w;
            m1 += a * w;
        }
        let mean = m1 / z;
        for &a in &self.exponents {
            let w = (2.0 * (a * s - top)).exp();
            m2 += (a - mean) * (a - mean) * w;
        }
        let excess = 0.5 * z.ln();
        ProfileValue {
            psi: top + excess,
            excess,
            d1: mean,
            d2: 2.0 * m2 / z,
        }
    }

    /// Smallest integer `S >= 1` with curvature mass below `tail` on each
    /// side of `[-S, S]` (exact: the masses are `psi'(-S)` and `a_n - psi'(S)`).
    pub fn cutoff(&self, tail: f64) -> f64 {
        let mut s = 1.0;
        while s < 1e4 {
            let lo = self.eval(-s).d1;
            let hi = self.degree() - self.eval(s).d1;
            if lo <= tail && hi <= tail {
                return s;
            }
            s += 1.0;
        }
        s
    }
}

/// Composite Gauss-Legendre nodes on `[-S, S]` with unit-width panels
/// (so that `s = 0`, where the canonical potential has its kink, is a
/// panel boundary) and `order` nodes per panel.
pub fn radial_nodes(cutoff: f64, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let panels = cutoff.ceil() as i64;
    let mut out = Vec::with_capacity(2 * panels as usize * order);
    for p in -panels..panels {
        let (a, b) = (p as f64, p as f64 + 1.0);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + half * xi, half * wi));
        }
    }
    out
}

/// Uniform angles `2 pi j / m`.
pub fn angular_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|j| TAU * j as f64 / m as f64).collect()
}

/// Quadrature settings for curve integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    /// Gauss-Legendre nodes per unit panel in `s = log|t|`.
    pub radial_order: usize,
    /// Trapezoid nodes in the angle.
    pub angular_order: usize,
    /// Curvature mass allowed outside the radial window, per side.
    pub tail: f64,
    /// Allowed disagreement between the configured and a refined rule.
    pub tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            radial_order: 16,
            angular_order: 256,
            tail: 1e-12,
            tol: 1e-3,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radial_order < 8 || self.angular_order < 8 {
            return Err(Error::config("quadrature orders must be at least 8"));
        }
        if !(self.tail > 0.0 && self.tail < 1e-3) {
            return Err(Error::config("tail mass must lie in (0, 1e-3)"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tolerance must be positive"));
        }
        Ok(())
    }

    /// The refined rule used for convergence checks.
    pub fn refined(&self) -> Self {
        Self {
            radial_order: self.radial_order * 2,
            angular_order: self.angular_order * 2,
            ..*self
        }
    }
}

/// Integrates `h(s)` against the curvature density `psi''(s) ds` over the
/// radial window.
pub fn radial_integral(profile: &RadialProfile, quad: &QuadConfig, h: impl Fn(f64, &ProfileValue) -> f64) -> f64 {
    let cutoff = profile.cutoff(quad.tail);
    let mut acc = 0.0;
    for (s, w) in radial_nodes(cutoff, quad.radial_order) {
        let v = profile.eval(s);
        acc += w * v.d2 * h(s, &v);
    }
    acc
}

/// Neumaier-compensated sum, in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for m in [1usize, 2, 5, 8, 16, 33] {
            let (x, w) = gauss_legendre(m);
            for k in 0..2 * m {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "m={m} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn curvature_mass_equals_degree() {
        for exps in [vec![0u64, 1], vec![0, 1, 2, 3], vec![0, 2, 5], vec![0, 3, 4, 7]] {
            let p = RadialProfile::new(&exps);
            let mass = radial_integral(&p, &QuadConfig::default(), |_, _| 1.0);
            assert!((mass - p.degree()).abs() < 1e-10, "{exps:?}: {mass}");
        }
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let p = RadialProfile::new(&[0, 1, 4]);
        let h = 1e-5;
        for s in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let (a, b, c) = (p.eval(s - h), p.eval(s), p.eval(s + h));
            assert!(((c.psi - a.psi) / (2.0 * h) - b.d1).abs() < 1e-8);
            assert!(((c.d1 - a.d1) / (2.0 * h) - b.d2).abs() < 1e-7);
        }
    }
}
