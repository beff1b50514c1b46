//! The equidistribution experiment: one block of report rows per conductor
//! of the net, computed in parallel and emitted in schedule order.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heights::{curve_height, height_point, normalized_height, smallness_functional, SectionDictionary};
use crate::measures::{
    character_moments, genericity_check, member_measure, net_member, net_moment_oracle, NetConfig, TorusMode,
};
use crate::metrics::MetricFamily;
use crate::points::{Component, EffectiveCycle};
use crate::quadrature::QuadConfig;

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub dictionary: SectionDictionary,
    pub quad: QuadConfig,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

/// One CSV row. Warning rows (members that were skipped) carry NaN in every
/// numeric column after `degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub family: &'static str,
    pub n: u64,
    pub orbit_size: usize,
    pub degree: u64,
    pub height: f64,
    pub normalized_height: f64,
    pub smallness_value: f64,
    pub moment_index: usize,
    pub moment: Complex64,
    pub oracle: Complex64,
    pub abs_error: f64,
    pub genericity_fraction: f64,
}

struct MemberSummary {
    orbit_size: usize,
    degree: u64,
    height: f64,
    normalized_height: f64,
    smallness: f64,
    genericity: f64,
}

/// Heights and smallness are computed on one component and scaled: every
/// configured metric and dictionary is Galois-stable, so conjugate
/// components contribute equally.
fn summarize(m: &MetricFamily, z: &EffectiveCycle, opts: &ExperimentOptions, avoid: &[crate::metrics::SectionSpec]) -> Result<MemberSummary> {
    let (first_mult, first) = z.components().first().ok_or_else(|| Error::domain("empty cycle"))?;
    let (orbit_size, point_height) = match first {
        Component::Orbit(o) => (o.size(), height_point(m, o)?.total),
        Component::Curve(c) => (z.components().len(), curve_height(m, c, &opts.quad)?.total),
    };
    let height = orbit_size as f64 * *first_mult as f64 * point_height;
    let representative = EffectiveCycle::new(z.dimension(), vec![(*first_mult, first.clone())])?;
    let smallness = smallness_functional(m, &representative, &opts.dictionary, &opts.quad)?.value;
    let genericity = genericity_check(std::slice::from_ref(z), avoid)?[0];
    Ok(MemberSummary {
        orbit_size,
        degree: z.degree(),
        height,
        normalized_height: normalized_height(height, z.dimension(), z.degree()),
        smallness,
        genericity,
    })
}

fn member_rows(
    cfg: &NetConfig,
    m: &MetricFamily,
    moments: &[Vec<i64>],
    opts: &ExperimentOptions,
    n: u64,
) -> Result<Vec<ReportRow>> {
    let family = cfg.family.name();
    let (z, exps) = net_member(&cfg.family, n)?;
    if z.degree() == 0 {
        return Ok(vec![ReportRow {
            family,
            n,
            orbit_size: 0,
            degree: 0,
            height: f64::NAN,
            normalized_height: f64::NAN,
            smallness_value: f64::NAN,
            moment_index: 0,
            moment: Complex64::new(f64::NAN, f64::NAN),
            oracle: Complex64::new(f64::NAN, f64::NAN),
            abs_error: f64::NAN,
            genericity_fraction: f64::NAN,
        }]);
    }
    let summary = summarize(m, &z, opts, &cfg.avoid)?;
    let mu = member_measure(m, &z, &opts.quad)?;
    let values = character_moments(mu.as_ref(), moments, TorusMode::Strict)?;
    Ok(values
        .into_iter()
        .zip(moments)
        .enumerate()
        .map(|(i, (v, a))| {
            let oracle = Complex64::new(net_moment_oracle(&cfg.family, n, &exps, a), 0.0);
            ReportRow {
                family,
                n,
                orbit_size: summary.orbit_size,
                degree: summary.degree,
                height: summary.height,
                normalized_height: summary.normalized_height,
                smallness_value: summary.smallness,
                moment_index: i,
                moment: v,
                oracle,
                abs_error: (v - oracle).norm(),
                genericity_fraction: summary.genericity,
            }
        })
        .collect())
}

/// Runs the net through the schedule. Members are independent and computed
/// concurrently; each member is evaluated sequentially, so the output does
/// not depend on the thread count.
pub fn run_equidistribution_experiment(
    cfg: &NetConfig,
    m: &MetricFamily,
    moments: &[Vec<i64>],
    opts: &ExperimentOptions,
) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    opts.quad.validate()?;
    let dim = cfg.family.ambient_dim();
    if m.ambient_dim() != dim {
        return Err(Error::config(format!(
            "metric on P^{} but the net lives in P^{dim}",
            m.ambient_dim()
        )));
    }
    if opts.dictionary.ambient_dim() != dim {
        return Err(Error::config("dictionary and net live on different spaces"));
    }
    if moments.is_empty() {
        return Err(Error::config("no moments requested"));
    }
    if let Some(a) = moments.iter().find(|a| a.len() != dim + 1) {
        return Err(Error::config(format!("moment {a:?} needs {} entries", dim + 1)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let blocks: Vec<Result<Vec<ReportRow>>> = pool.install(|| {
        cfg.schedule
            .par_iter()
            .map(|&n| member_rows(cfg, m, moments, opts, n))
            .collect()
    });
    let mut rows = Vec::new();
    for b in blocks {
        rows.extend(b?);
    }
    Ok(rows)
}

/// `max_a |moment|` per conductor, over nontrivial characters only.
pub fn max_moment_by_conductor(rows: &[ReportRow], moments: &[Vec<i64>]) -> Vec<(u64, f64)> {
    let trivial = |a: &[i64]| a.iter().skip(1).all(|&x| x == 0);
    let mut out: Vec<(u64, f64)> = Vec::new();
    for r in rows {
        if moments.get(r.moment_index).is_some_and(|a| trivial(a)) {
            continue;
        }
        match out.last_mut() {
            Some((n, v)) if *n == r.n => *v = v.max(r.moment.norm()),
            _ => out.push((r.n, r.moment.norm())),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::NetFamily;

    fn opts(n: usize, threads: usize) -> ExperimentOptions {
        ExperimentOptions {
            dictionary: SectionDictionary::coordinate(n),
            quad: QuadConfig::default(),
            threads,
        }
    }

    #[test]
    fn torsion_points_match_ramanujan_oracle() {
        let cfg = NetConfig {
            family: NetFamily::TorsionPoints { n: 1 },
            schedule: vec![5, 7, 11, 13],
            avoid: vec![],
        };
        let moments = vec![vec![0, 0], vec![0, 1], vec![0, 5]];
        let rows = run_equidistribution_experiment(&cfg, &MetricFamily::canonical(1), &moments, &opts(1, 2)).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert!(r.abs_error < 1e-12, "{r:?}");
            assert_eq!(r.height, 0.0);
            assert_eq!(r.orbit_size as u64, r.n - 1);
            if r.moment_index == 0 {
                assert_eq!(r.moment, Complex64::new(1.0, 0.0));
            }
        }
        let n5 = rows.iter().find(|r| r.n == 5 && r.moment_index == 2).unwrap();
        assert!((n5.moment.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_rows_are_thread_independent() {
        let cfg = NetConfig {
            family: NetFamily::TorsionMonomialCurves { exponents: vec![0, 1, 2] },
            schedule: vec![3, 5, 7],
            avoid: vec![],
        };
        let moments = vec![vec![0, 2, -1], vec![-1, 1, 0], vec![0, 0, 0]];
        let m = MetricFamily::fubini_study(2);
        let a = run_equidistribution_experiment(&cfg, &m, &moments, &opts(2, 1)).unwrap();
        let b = run_equidistribution_experiment(&cfg, &m, &moments, &opts(2, 3)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        for r in &a {
            assert!(r.abs_error < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn mismatched_configuration_is_rejected() {
        let cfg = NetConfig {
            family: NetFamily::TorsionPoints { n: 1 },
            schedule: vec![5],
            avoid: vec![],
        };
        let e = run_equidistribution_experiment(&cfg, &MetricFamily::canonical(2), &[vec![0, 1]], &opts(1, 1));
        assert!(matches!(e, Err(Error::Config(_))));
        let e = run_equidistribution_experiment(&cfg, &MetricFamily::canonical(1), &[vec![0, 1, 2]], &opts(1, 1));
        assert!(matches!(e, Err(Error::Config(_))));
    }
}
