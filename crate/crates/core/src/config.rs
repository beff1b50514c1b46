//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers, overridden key by key from the command line, then resolved
//! into typed objects.
//!
//! ```text
//! [metric]
//! base = fs                 # canonical | fs
//! perturbation = re:0:1     # optional, with t
//! t = 1/8
//! [net]
//! family = torsion-curves   # torsion-points | torsion-curves
//! dim = 1                   # torsion-points only
//! exponents = 0,1,2,3       # torsion-curves only
//! schedule = primes:2..100  # 3,5,7 | primes:LO..HI | sample:COUNT:LO..HI
//! avoid = mono:1,0,0,0      # whitespace-separated sections
//! [dictionary]
//! kind = coordinate         # coordinate | torsion-differences:M
//! [moments]
//! list = 0,1,-1,0 0,0,1,-1  # whitespace-separated vectors, or box:B
//! [quadrature]
//! radial_order = 16
//! angular_order = 256
//! tail = 1e-12
//! tol = 1e-3
//! [scan]
//! eta = 0.5
//! reference = 0.5416666666666666
//! zhang_tol = 1e-3
//! [run]
//! seed = 1
//! threads = 4
//! out = report.csv
//! ```

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::adelic::Place;
use crate::arith::factor::primes_up_to;
use crate::error::{Error, Result};
use crate::heights::{fs_height_projective_space, SectionDictionary};
use crate::measures::{NetConfig, NetFamily};
use crate::metrics::{parse_function, parse_section, MetricFamily};
use crate::points::parse_rational_str;
use crate::quadrature::QuadConfig;

/// Every accepted `section.key`.
pub const KNOWN_KEYS: &[&str] = &[
    "metric.base",
    "metric.perturbation",
    "metric.t",
    "net.family",
    "net.dim",
    "net.exponents",
    "net.schedule",
    "net.avoid",
    "dictionary.kind",
    "moments.list",
    "quadrature.radial_order",
    "quadrature.angular_order",
    "quadrature.tail",
    "quadrature.tol",
    "scan.eta",
    "scan.reference",
    "scan.zhang_tol",
    "run.seed",
    "run.threads",
    "run.out",
];

/// Parses the file grammar into `section.key -> value`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: &str| Error::config(format!("line {}: {msg}", lineno + 1));
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| at("unterminated section header"))?.trim();
            if name.is_empty() {
                return Err(at("empty section name"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| at("expected 'key = value'"))?;
        let sec = section.as_deref().ok_or_else(|| at("key outside of any [section]"))?;
        let key = format!("{sec}.{}", k.trim());
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(at(&format!("unknown key '{key}'")));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(at(&format!("duplicate key '{key}'")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub metric: String,
    pub perturbation: Option<String>,
    pub t: Option<String>,
    pub family: String,
    pub dim: usize,
    pub exponents: Vec<u64>,
    pub schedule: String,
    pub avoid: Vec<String>,
    pub dictionary: String,
    pub moments: String,
    pub radial_order: usize,
    pub angular_order: usize,
    pub tail: f64,
    pub tol: f64,
    pub eta: f64,
    pub reference: Option<f64>,
    pub zhang_tol: f64,
    pub seed: u64,
    /// Neither the destination nor the thread count is echoed, so files
    /// written by different runs of the same experiment compare equal.
    #[serde(skip)]
    pub out: Option<String>,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let q = QuadConfig::default();
        Self {
            metric: "canonical".into(),
            perturbation: None,
            t: None,
            family: "torsion-points".into(),
            dim: 1,
            exponents: vec![0, 1, 2, 3],
            schedule: "primes:2..50".into(),
            avoid: Vec::new(),
            dictionary: "coordinate".into(),
            moments: "box:2".into(),
            radial_order: q.radial_order,
            angular_order: q.angular_order,
            tail: q.tail,
            tol: q.tol,
            eta: 0.5,
            reference: None,
            zhang_tol: 1e-3,
            seed: 1,
            out: None,
            threads: 0,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse '{v}'")))
}

fn int_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|x| num(key, x)).collect()
}

fn range(key: &str, v: &str) -> Result<(u64, u64)> {
    let (lo, hi) = v
        .split_once("..")
        .ok_or_else(|| Error::config(format!("{key}: expected LO..HI, got '{v}'")))?;
    let (lo, hi) = (num(key, lo)?, num(key, hi)?);
    if lo > hi {
        return Err(Error::config(format!("{key}: empty range {v}")));
    }
    Ok((lo, hi))
}

const MAX_SCHEDULE_BOUND: u64 = 1 << 24;

fn primes_in(key: &str, lo: u64, hi: u64) -> Result<Vec<u64>> {
    if hi > MAX_SCHEDULE_BOUND {
        return Err(Error::config(format!("{key}: bound {hi} above {MAX_SCHEDULE_BOUND}")));
    }
    Ok(primes_up_to(hi).into_iter().filter(|&p| p >= lo).collect())
}

/// Resolves a schedule string; sampling draws from a ChaCha stream seeded by `seed`.
pub fn resolve_schedule(s: &str, seed: u64) -> Result<Vec<u64>> {
    let key = "net.schedule";
    let out = if let Some(r) = s.strip_prefix("primes:") {
        let (lo, hi) = range(key, r)?;
        primes_in(key, lo, hi)?
    } else if let Some(r) = s.strip_prefix("sample:") {
        let (count, r) = r
            .split_once(':')
            .ok_or_else(|| Error::config(format!("{key}: expected sample:COUNT:LO..HI")))?;
        let count: usize = num(key, count)?;
        let (lo, hi) = range(key, r)?;
        let pool = primes_in(key, lo, hi)?;
        if count > pool.len() {
            return Err(Error::config(format!("{key}: only {} primes in {lo}..{hi}", pool.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick: Vec<u64> = pool.choose_multiple(&mut rng, count).copied().collect();
        pick.sort_unstable();
        pick
    } else {
        int_list(key, s)?
    };
    if out.is_empty() {
        return Err(Error::config(format!("{key}: '{s}' is empty")));
    }
    Ok(out)
}

/// Parses whitespace-separated moment vectors, or `box:B` for every
/// `(-(a_1 + ... + a_n), a_1, ..., a_n)` with `|a_i| <= B`.
pub fn resolve_moments(s: &str, dim: usize) -> Result<Vec<Vec<i64>>> {
    if let Some(b) = s.strip_prefix("box:") {
        let b: i64 = num("moments.list", b)?;
        if b < 0 || (2 * b + 1).checked_pow(dim as u32).is_none_or(|c| c > 1 << 20) {
            return Err(Error::config("moments.list: box too large"));
        }
        let mut out = vec![vec![]];
        for _ in 0..dim {
            out = out
                .into_iter()
                .flat_map(|v: Vec<i64>| {
                    (-b..=b).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        return Ok(out
            .into_iter()
            .map(|v| {
                let mut a = vec![-v.iter().sum::<i64>()];
                a.extend(v);
                a
            })
            .collect());
    }
    let out = s
        .split([' ', '\t', ';'])
        .filter(|x| !x.is_empty())
        .map(|x| int_list("moments.list", x))
        .collect::<Result<Vec<Vec<i64>>>>()?;
    if out.is_empty() {
        return Err(Error::config("moments.list is empty"));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Defaults, then file entries, then command-line overrides.
    pub fn resolve(file: &BTreeMap<String, String>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut merged = file.clone();
        for (k, v) in overrides {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(Error::config(format!("unknown key '{k}'")));
            }
            merged.insert(k.clone(), v.clone());
        }
        let mut c = Self::default();
        for (k, v) in &merged {
            match k.as_str() {
                "metric.base" => c.metric = v.clone(),
                "metric.perturbation" => c.perturbation = Some(v.clone()),
                "metric.t" => c.t = Some(v.clone()),
                "net.family" => c.family = v.clone(),
                "net.dim" => c.dim = num(k, v)?,
                "net.exponents" => c.exponents = int_list(k, v)?,
                "net.schedule" => c.schedule = v.clone(),
                "net.avoid" => c.avoid = v.split_whitespace().map(str::to_string).collect(),
                "dictionary.kind" => c.dictionary = v.clone(),
                "moments.list" => c.moments = v.clone(),
                "quadrature.radial_order" => c.radial_order = num(k, v)?,
                "quadrature.angular_order" => c.angular_order = num(k, v)?,
                "quadrature.tail" => c.tail = num(k, v)?,
                "quadrature.tol" => c.tol = num(k, v)?,
                "scan.eta" => c.eta = num(k, v)?,
                "scan.reference" => c.reference = Some(num(k, v)?),
                "scan.zhang_tol" => c.zhang_tol = num(k, v)?,
                "run.seed" => c.seed = num(k, v)?,
                "run.threads" => c.threads = num(k, v)?,
                "run.out" => c.out = Some(v.clone()),
                _ => return Err(Error::config(format!("unknown key '{k}'"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks that every grammar string parses.
    pub fn validate(&self) -> Result<()> {
        self.metric_family()?;
        self.net_config()?;
        self.section_dictionary()?;
        self.moment_vectors()?;
        self.quad().validate()?;
        Ok(())
    }

    pub fn ambient_dim(&self) -> Result<usize> {
        Ok(self.family_tag()?.ambient_dim())
    }

    fn family_tag(&self) -> Result<NetFamily> {
        match self.family.as_str() {
            "torsion-points" => Ok(NetFamily::TorsionPoints { n: self.dim }),
            "torsion-curves" => Ok(NetFamily::TorsionMonomialCurves {
                exponents: self.exponents.clone(),
            }),
            f => Err(Error::config(format!("net.family: unknown family '{f}'"))),
        }
    }

    pub fn metric_family(&self) -> Result<MetricFamily> {
        let n = self.ambient_dim()?;
        let base = match self.metric.as_str() {
            "canonical" => MetricFamily::canonical(n),
            "fs" => MetricFamily::fubini_study(n),
            b => return Err(Error::config(format!("metric.base: unknown metric '{b}'"))),
        };
        match (&self.perturbation, &self.t) {
            (None, None) => Ok(base),
            (Some(f), Some(t)) => {
                let f = parse_function(f)?;
                let t = parse_rational_str(t)?;
                if t.is_zero() {
                    return Ok(base);
                }
                MetricFamily::perturbed(base, Place::RationalArchimedean, f, t)
            }
            _ => Err(Error::config("metric.perturbation and metric.t go together")),
        }
    }

    pub fn net_config(&self) -> Result<NetConfig> {
        let cfg = NetConfig {
            family: self.family_tag()?,
            schedule: resolve_schedule(&self.schedule, self.seed)?,
            avoid: self.avoid.iter().map(|s| parse_section(s)).collect::<Result<_>>()?,
        };
        cfg.validate()?;
        let n = cfg.family.ambient_dim();
        if cfg.avoid.iter().any(|s| s.nvars() != n + 1) {
            return Err(Error::config("net.avoid: section in the wrong number of variables"));
        }
        Ok(cfg)
    }

    pub fn section_dictionary(&self) -> Result<SectionDictionary> {
        let n = self.ambient_dim()?;
        if self.dictionary == "coordinate" {
            return Ok(SectionDictionary::coordinate(n));
        }
        if let Some(m) = self.dictionary.strip_prefix("torsion-differences:") {
            let m: u64 = num("dictionary.kind", m)?;
            if m == 0 || m > 64 {
                return Err(Error::config("dictionary.kind: conductor must be in 1..=64"));
            }
            return SectionDictionary::with_torsion_differences(n, m);
        }
        Err(Error::config(format!("dictionary.kind: unknown dictionary '{}'", self.dictionary)))
    }

    pub fn moment_vectors(&self) -> Result<Vec<Vec<i64>>> {
        let n = self.ambient_dim()?;
        let v = resolve_moments(&self.moments, n)?;
        if let Some(a) = v.iter().find(|a| a.len() != n + 1) {
            return Err(Error::config(format!("moments.list: {a:?} needs {} entries", n + 1)));
        }
        Ok(v)
    }

    pub fn quad(&self) -> QuadConfig {
        QuadConfig {
            radial_order: self.radial_order,
            angular_order: self.angular_order,
            tail: self.tail,
            tol: self.tol,
        }
    }

    /// `reference` if configured, else the normalized height of P^n under the
    /// unperturbed root metric (0 for canonical).
    pub fn zhang_reference(&self) -> Result<f64> {
        if let Some(r) = self.reference {
            return Ok(r);
        }
        let n = self.ambient_dim()?;
        Ok(match self.metric.as_str() {
            "fs" => fs_height_projective_space(n) / (n as f64 + 1.0),
            _ => 0.0,
        })
    }

    /// The resolved configuration for the provenance header.
    pub fn echo(&self) -> Result<Value> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::config(e.to_string()))?;
        v["resolved_schedule"] = serde_json::json!(self.net_config()?.schedule);
        Ok(v)
    }
}
