//! The `heightlab` command line. Exit codes: 0 success, 1 domain error,
//! 2 numeric error, 3 configuration or usage error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::adelic::{exact_product_formula, product_formula_defect, valuation_vector, BaseElement, ExactDefect, Place};
use crate::arith::{FiniteField, Poly};
use crate::config::{parse_config_text, ExperimentConfig};
use crate::constants;
use crate::error::{Error, Result};
use crate::experiment::{max_moment_by_conductor, run_equidistribution_experiment, ExperimentOptions};
use crate::heights::{
    curve_height, essential_minimum_upper_estimate, height_point, minima_filter, normalized_height,
    smallness_functional, zhang_check, MinimaCandidate,
};
use crate::measures::{curve_measure, net_member, torsion_exponents};
use crate::metrics::{parse_function, MetricFamily};
use crate::points::{galois_orbit, parse_point, parse_rational_str, EffectiveCycle, MonomialCurve};
use crate::quadrature::QuadConfig;
use crate::report::{fmt_float, write_csv, write_json, write_table};
use crate::selftest;

#[derive(Parser, Debug)]
#[command(name = "heightlab", version, about = "Heights, correcting integrals and equidistribution experiments on projective space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Valuation vector and product-formula defect of elements of Q or F_q(t).
    ProductCheck(ProductArgs),
    /// Height of one point.
    Height(PointArgs),
    /// Height of the Galois orbit of a point.
    OrbitHeight(PointArgs),
    /// Height of a torsion-translated monomial curve.
    CurveHeight(CurveArgs),
    /// Polynomial response of heights to a metric perturbation.
    PerturbCheck(PerturbArgs),
    /// Character moments of a net against exact oracles (CSV).
    Equidist(NetArgs),
    /// Net members whose dictionary value is below eta times the degree.
    MinimaScan(NetArgs),
    /// Essential minimum estimate along a net, checked against a reference.
    ZhangScan(NetArgs),
    /// Runs the acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct ProductArgs {
    /// `a/b`, or `ff:q:(c0,c1,...)/(d0,d1,...)` with ascending coefficients.
    #[arg(long)]
    element: Vec<String>,
    /// Also check this many random elements of Q and of F_2(t).
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct MetricArgs {
    /// `canonical` or `fs`.
    #[arg(long, default_value = "canonical")]
    metric: String,
    /// Elementary function for an archimedean perturbation.
    #[arg(long, requires = "t")]
    perturbation: Option<String>,
    /// Perturbation parameter (rational).
    #[arg(long, requires = "perturbation")]
    t: Option<String>,
}

impl MetricArgs {
    fn build(&self, n: usize) -> Result<MetricFamily> {
        let base = match self.metric.as_str() {
            "canonical" => MetricFamily::canonical(n),
            "fs" => MetricFamily::fubini_study(n),
            m => return Err(Error::config(format!("unknown metric '{m}'"))),
        };
        match (&self.perturbation, &self.t) {
            (Some(f), Some(t)) => {
                let t = parse_rational_str(t)?;
                if t.is_zero() {
                    return Ok(base);
                }
                MetricFamily::perturbed(base, Place::RationalArchimedean, parse_function(f)?, t)
            }
            _ => Ok(base),
        }
    }
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// `rat:(..)`, `cyc:N:(..;..)` or `ff:q:m:(..;..)`.
    #[arg(long)]
    point: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct QuadArgs {
    #[arg(long, default_value_t = QuadConfig::default().radial_order)]
    radial_order: usize,
    #[arg(long, default_value_t = QuadConfig::default().angular_order)]
    angular_order: usize,
    #[arg(long, default_value_t = QuadConfig::default().tail)]
    tail: f64,
    #[arg(long, default_value_t = QuadConfig::default().tol)]
    tol: f64,
}

impl QuadArgs {
    fn build(&self) -> Result<QuadConfig> {
        let q = QuadConfig {
            radial_order: self.radial_order,
            angular_order: self.angular_order,
            tail: self.tail,
            tol: self.tol,
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Args, Debug, Clone)]
struct CurveSpec {
    /// Strictly increasing exponents starting at 0, e.g. `0,1,2,3`.
    #[arg(long, value_delimiter = ',')]
    exponents: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    conductor: u64,
    /// Translate exponents k_i (coefficient zeta_N^{k_i}); defaults to the
    /// net's torsion exponents for the conductor.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    translate: Option<Vec<i64>>,
}

impl CurveSpec {
    fn build(&self) -> Result<MonomialCurve> {
        if self.exponents.len() < 2 {
            return Err(Error::config("--exponents needs at least two entries"));
        }
        let n = self.exponents.len() - 1;
        let translate = match &self.translate {
            Some(t) => t.clone(),
            None => torsion_exponents(self.conductor, n).into_iter().map(|e| e as i64).collect(),
        };
        MonomialCurve::new(&self.exponents, self.conductor, &translate)
    }
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    curve: CurveSpec,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    /// `canonical` or `fs`.
    #[arg(long, default_value = "fs")]
    metric: String,
    #[arg(long)]
    perturbation: String,
    /// Comma-separated rational parameters.
    #[arg(long, default_value = "-1/4,-1/8,0,1/8,1/4", allow_hyphen_values = true)]
    ts: String,
    /// A point; otherwise a curve is read from the curve flags.
    #[arg(long)]
    point: Option<String>,
    #[arg(long, value_delimiter = ',')]
    exponents: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    conductor: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    translate: Option<Vec<i64>>,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NetArgs {
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    perturbation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    exponents: Option<String>,
    #[arg(long)]
    schedule: Option<String>,
    /// Whitespace-separated sections.
    #[arg(long)]
    avoid: Option<String>,
    #[arg(long)]
    dictionary: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    moments: Option<String>,
    #[arg(long)]
    radial_order: Option<String>,
    #[arg(long)]
    angular_order: Option<String>,
    #[arg(long)]
    tail: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<String>,
    #[arg(long)]
    zhang_tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl NetArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::config(format!("cannot read {}: {e}", p.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut o = BTreeMap::new();
        let flags = [
            ("metric.base", &self.metric),
            ("metric.perturbation", &self.perturbation),
            ("metric.t", &self.t),
            ("net.family", &self.family),
            ("net.dim", &self.dim),
            ("net.exponents", &self.exponents),
            ("net.schedule", &self.schedule),
            ("net.avoid", &self.avoid),
            ("dictionary.kind", &self.dictionary),
            ("moments.list", &self.moments),
            ("quadrature.radial_order", &self.radial_order),
            ("quadrature.angular_order", &self.angular_order),
            ("quadrature.tail", &self.tail),
            ("quadrature.tol", &self.tol),
            ("scan.eta", &self.eta),
            ("scan.reference", &self.reference),
            ("scan.zhang_tol", &self.zhang_tol),
            ("run.seed", &self.seed),
            ("run.threads", &self.threads),
            ("run.out", &self.out),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                o.insert(k.to_string(), v.clone());
            }
        }
        ExperimentConfig::resolve(&file, &o)
    }
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Run a single criterion (1-12).
    #[arg(long)]
    criterion: Option<u8>,
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::domain(format!("cannot write {}: {e}", path.display()))
}

/// Runs `emit` against the file at `path`, or stdout.
fn with_output(path: Option<&Path>, emit: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| io_err(p, e))?;
            let mut w = BufWriter::new(f);
            emit(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            emit(&mut w).map_err(|e| io_err(Path::new("stdout"), e))
        }
    }
}

/// JSON goes to `--out` only; stdout carries the one-line summary.
fn emit_json(out: Option<&Path>, provenance: &Value, body: Value) -> Result<()> {
    if let Some(p) = out {
        with_output(Some(p), |w| write_json(w, provenance, body))?;
    }
    Ok(())
}

fn parse_element(s: &str) -> Result<BaseElement> {
    if let Some(rest) = s.strip_prefix("ff:") {
        let (q, body) = rest
            .split_once(':')
            .ok_or_else(|| Error::parse("expected ff:q:(num)/(den)"))?;
        let q: u64 = q.parse().map_err(|_| Error::parse(format!("bad field order '{q}'")))?;
        let field = Arc::new(FiniteField::with_order(q)?);
        let poly = |t: &str| -> Result<Poly> {
            let inner = t
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| Error::parse(format!("expected '(c0,...)', got '{t}'")))?;
            let c = inner
                .split(',')
                .map(|c| c.trim().parse::<u64>().map_err(|_| Error::parse(format!("bad coefficient '{c}'"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(Poly::from_coeffs(c))
        };
        let (num, den) = match body.split_once('/') {
            Some((a, b)) => (poly(a)?, poly(b)?),
            None => (poly(body)?, Poly::one()),
        };
        return BaseElement::function_field(field, num, den);
    }
    let r = parse_rational_str(s.strip_prefix("rat:").unwrap_or(s))?;
    if r.is_zero() {
        return Err(Error::domain("the product formula needs a nonzero element"));
    }
    Ok(BaseElement::Rational(r))
}

fn element_report(label: &str, x: &BaseElement) -> Result<(bool, f64, Value)> {
    let vv = valuation_vector(x)?;
    let exact = exact_product_formula(x)?;
    let defect = product_formula_defect(x)?;
    let vals: Vec<Value> = vv
        .valuations
        .iter()
        .map(|(p, v)| json!({"place": p.to_string(), "weight": p.weight(), "ord": v}))
        .collect();
    let exact_json = match &exact {
        ExactDefect::Rational { residual } => json!({"residual": residual.to_string()}),
        ExactDefect::FunctionField { degree_sum } => json!({"degree_sum": degree_sum}),
    };
    Ok((
        exact.is_zero(),
        defect,
        json!({
            "element": label,
            "valuations": vals,
            "archimedean_log": vv.archimedean_log,
            "exact": exact_json,
            "exact_defect_zero": exact.is_zero(),
            "float_defect": defect,
        }),
    ))
}

fn product_check(a: &ProductArgs) -> Result<()> {
    if a.element.is_empty() && a.random.is_none() {
        return Err(Error::config("give --element or --random"));
    }
    let mut items: Vec<(String, BaseElement)> = Vec::new();
    for s in &a.element {
        items.push((s.clone(), parse_element(s)?));
    }
    if let Some(count) = a.random {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let f2 = Arc::new(FiniteField::prime(2)?);
        for _ in 0..count {
            let num: i64 = loop {
                let v = rng.gen_range(-1_000_000..=1_000_000);
                if v != 0 {
                    break v;
                }
            };
            let den: i64 = rng.gen_range(1..=1_000_000);
            items.push((format!("{num}/{den}"), BaseElement::rational(num, den)?));
            let mut poly = || loop {
                let d = rng.gen_range(0..=12);
                let p = Poly::from_coeffs((0..=d).map(|_| rng.gen_range(0..2)).collect());
                if !p.is_zero() {
                    break p;
                }
            };
            let (n, d) = (poly(), poly());
            items.push(("random F_2(t)".into(), BaseElement::function_field(f2.clone(), n, d)?));
        }
    }
    let mut all_exact = true;
    let mut worst = 0.0f64;
    let mut reports = Vec::new();
    for (label, x) in &items {
        let (exact, defect, v) = element_report(label, x)?;
        all_exact &= exact;
        worst = worst.max(defect.abs());
        reports.push(v);
    }
    let provenance = json!({"command": "product-check", "seed": a.seed, "random": a.random});
    emit_json(a.out.as_deref(), &provenance, json!(reports))?;
    if a.element.len() == 1 && a.random.is_none() {
        println!("{}", serde_json::to_string(&reports[0]).expect("json"));
    }
    println!(
        "product formula over {} elements: exact defect {}, max float defect {}",
        items.len(),
        if all_exact { "0" } else { "NONZERO" },
        fmt_float(worst)
    );
    if !all_exact {
        return Err(Error::domain("exact product formula defect is nonzero"));
    }
    Ok(())
}

fn point_height(a: &PointArgs, extensive: bool) -> Result<()> {
    let p = parse_point(&a.point)?;
    let m = a.metric.build(p.ambient_dim())?;
    let orbit = galois_orbit(&p)?;
    let h = height_point(&m, &orbit)?;
    let provenance = json!({
        "command": if extensive { "orbit-height" } else { "height" },
        "metric": m.to_string(),
        "point": a.point,
    });
    if extensive {
        let size = orbit.size();
        let total = size as f64 * h.total;
        let normalized = normalized_height(total, 0, size as u64);
        emit_json(
            a.out.as_deref(),
            &provenance,
            json!({"orbit_size": size, "point_height": h.to_json(), "orbit_height": total, "normalized_height": normalized}),
        )?;
        println!(
            "orbit size {size}, orbit height {}, normalized {}",
            fmt_float(total),
            fmt_float(normalized)
        );
    } else {
        emit_json(a.out.as_deref(), &provenance, h.to_json())?;
        println!("{}", fmt_float(h.total));
    }
    Ok(())
}

fn curve_height_cmd(a: &CurveArgs) -> Result<()> {
    let c = a.curve.build()?;
    let m = a.metric.build(c.ambient_dim())?;
    let quad = a.quad.build()?;
    let h = curve_height(&m, &c, &quad)?;
    let normalized = normalized_height(h.total, 1, c.degree());
    let reference = if m.is_perturbed() {
        None
    } else {
        match m.root() {
            crate::metrics::BaseMetric::Canonical => Some(0.0),
            crate::metrics::BaseMetric::FubiniStudy => {
                constants::curve_reference(c.exponents(), true).map(|r| r.value)
            }
        }
    };
    let provenance = json!({
        "command": "curve-height",
        "metric": m.to_string(),
        "exponents": c.exponents(),
        "conductor": c.conductor(),
        "radial_order": quad.radial_order,
        "angular_order": quad.angular_order,
        "tail": quad.tail,
        "tol": quad.tol,
    });
    let mut body = h.to_json();
    body["normalized_height"] = json!(normalized);
    if let Some(r) = reference {
        body["reference"] = json!(r);
        body["abs_error"] = json!((h.total - r).abs());
    }
    emit_json(a.out.as_deref(), &provenance, body)?;
    match reference {
        Some(r) => println!(
            "{} (normalized {}) reference {} abs error {}",
            fmt_float(h.total),
            fmt_float(normalized),
            fmt_float(r),
            fmt_float((h.total - r).abs())
        ),
        None => println!("{} (normalized {})", fmt_float(h.total), fmt_float(normalized)),
    }
    Ok(())
}

fn perturb_check(a: &PerturbArgs) -> Result<()> {
    let f = parse_function(&a.perturbation)?;
    let ts: Vec<BigRational> = a.ts.split(',').map(|t| parse_rational_str(t.trim())).collect::<Result<_>>()?;
    if ts.len() < 4 {
        return Err(Error::config("--ts needs at least four values"));
    }
    let quad = a.quad.build()?;
    let metric_args = |t: &BigRational| MetricArgs {
        metric: a.metric.clone(),
        perturbation: Some(a.perturbation.clone()),
        t: Some(t.to_string()),
    };
    let xs: Vec<f64> = ts.iter().map(|t| t.to_f64().unwrap_or(f64::NAN)).collect();
    let (hs, predicted, dim) = match &a.point {
        Some(ps) => {
            let p = parse_point(ps)?;
            let orbit = galois_orbit(&p)?;
            let hs = ts
                .iter()
                .map(|t| height_point(&metric_args(t).build(p.ambient_dim())?, &orbit).map(|h| h.total))
                .collect::<Result<Vec<_>>>()?;
            let k = p.conductor().ok_or_else(|| Error::domain("perturbations need an archimedean place"))?;
            let units = crate::cyclotomic::ring(k).units();
            let avg = units
                .iter()
                .map(|&u| p.embed(u).map(|x| f.eval(&x)))
                .sum::<Result<f64>>()?
                / units.len() as f64;
            (hs, avg, 0usize)
        }
        None => {
            let c = CurveSpec {
                exponents: a.exponents.clone(),
                conductor: a.conductor,
                translate: a.translate.clone(),
            }
            .build()?;
            let hs = ts
                .iter()
                .map(|t| curve_height(&metric_args(t).build(c.ambient_dim())?, &c, &quad).map(|h| h.total))
                .collect::<Result<Vec<_>>>()?;
            let base = metric_args(&BigRational::zero()).build(c.ambient_dim())?;
            let mu = curve_measure(&base, &c, &quad)?;
            (hs, 2.0 * mu.integrate(|x| f.eval(x)), 1usize)
        }
    };
    // h(t) is a polynomial of degree dim + 1 in t
    let fit = polyfit(&xs, &hs, dim + 1);
    let residual = xs
        .iter()
        .zip(&hs)
        .map(|(x, h)| (h - fit.iter().rev().fold(0.0, |acc, c| acc * x + c)).abs())
        .fold(0.0, f64::max);
    let provenance = json!({"command": "perturb-check", "metric": a.metric, "perturbation": a.perturbation, "ts": a.ts});
    emit_json(
        a.out.as_deref(),
        &provenance,
        json!({"t": xs, "height": hs, "fit": fit, "residual": residual, "linear": fit[1], "predicted_linear": predicted}),
    )?;
    println!(
        "degree-{} fit residual {}, linear coefficient {} vs predicted {} (abs error {})",
        dim + 1,
        fmt_float(residual),
        fmt_float(fit[1]),
        fmt_float(predicted),
        fmt_float((fit[1] - predicted).abs())
    );
    Ok(())
}

/// Least squares by normal equations; coefficients in ascending order.
fn polyfit(x: &[f64], y: &[f64], deg: usize) -> Vec<f64> {
    let k = deg + 1;
    let mut a = vec![vec![0.0; k + 1]; k];
    for (xi, yi) in x.iter().zip(y) {
        for r in 0..k {
            for c in 0..k {
                a[r][c] += xi.powi((r + c) as i32);
            }
            a[r][k] += yi * xi.powi(r as i32);
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    (0..k).map(|r| a[r][k] / a[r][r]).collect()
}

fn equidist(a: &NetArgs) -> Result<()> {
    let cfg = a.resolve()?;
    let net = cfg.net_config()?;
    let moments = cfg.moment_vectors()?;
    let opts = ExperimentOptions {
        dictionary: cfg.section_dictionary()?,
        quad: cfg.quad(),
        threads: cfg.threads,
    };
    let rows = run_equidistribution_experiment(&net, &cfg.metric_family()?, &moments, &opts)?;
    let mut provenance = cfg.echo()?;
    provenance["command"] = json!("equidist");
    provenance["test_family"] = json!("torus characters only; limit moment 0 for every nontrivial character");
    let out = cfg.out.as_deref().map(Path::new);
    with_output(out, |w| write_csv(w, &provenance, &rows))?;
    let worst = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let maxima = max_moment_by_conductor(&rows, &moments);
    let last = maxima.last().map(|&(n, v)| format!(", max nontrivial |moment| {} at N={n}", fmt_float(v)));
    let summary = format!(
        "{} rows over {} conductors, max oracle error {}{}",
        rows.len(),
        net.schedule.len(),
        fmt_float(worst),
        last.unwrap_or_default()
    );
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn members(cfg: &ExperimentConfig) -> Result<Vec<(u64, EffectiveCycle)>> {
    let net = cfg.net_config()?;
    net.schedule
        .iter()
        .map(|&n| net_member(&net.family, n).map(|(z, _)| (n, z)))
        .collect()
}

fn minima_scan(a: &NetArgs) -> Result<()> {
    let cfg = a.resolve()?;
    let m = cfg.metric_family()?;
    let d = cfg.section_dictionary()?;
    let quad = cfg.quad();
    let mut candidates = Vec::new();
    for (n, z) in members(&cfg)? {
        let r = smallness_functional(&m, &z, &d, &quad)?;
        candidates.push(MinimaCandidate {
            label: format!("N={n}"),
            value: r.value * z.degree() as f64,
            degree: z.degree(),
        });
    }
    let kept = minima_filter(&candidates, cfg.eta);
    let rows: Vec<String> = candidates
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{},{}",
                c.label.trim_start_matches("N="),
                c.degree,
                fmt_float(c.value),
                fmt_float(c.value / c.degree as f64),
                kept.iter().any(|k| k.label == c.label)
            )
        })
        .collect();
    let mut provenance = cfg.echo()?;
    provenance["command"] = json!("minima-scan");
    provenance["caveat"] = json!("dictionary values under-approximate the supremum over all sections");
    let out = cfg.out.as_deref().map(Path::new);
    with_output(out, |w| write_table(w, &provenance, "N,degree,dictionary_value,per_degree,selected", &rows))?;
    let summary = format!("{} of {} members below eta = {}", kept.len(), candidates.len(), cfg.eta);
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn zhang_scan(a: &NetArgs) -> Result<()> {
    let cfg = a.resolve()?;
    let m = cfg.metric_family()?;
    let net = cfg.net_config()?;
    let zs: Vec<EffectiveCycle> = members(&cfg)?.into_iter().map(|(_, z)| z).collect();
    let est = essential_minimum_upper_estimate(
        &m,
        &mut zs.into_iter(),
        &cfg.section_dictionary()?,
        &net.avoid,
        net.schedule.len(),
        &cfg.quad(),
    )?;
    let reference = cfg.zhang_reference()?;
    let report = zhang_check(est.estimate, reference, cfg.zhang_tol);
    let mut provenance = cfg.echo()?;
    provenance["command"] = json!("zhang-scan");
    emit_json(
        cfg.out.as_deref().map(Path::new),
        &provenance,
        json!({
            "estimate": est.estimate,
            "reference": reference,
            "tol": cfg.zhang_tol,
            "status": report.status.to_string(),
            "values": est.values,
            "genericity": est.genericity,
            "partial": est.partial,
            "caveats": est.caveats,
        }),
    )?;
    println!(
        "estimate {} vs reference {}: {}",
        fmt_float(est.estimate),
        fmt_float(reference),
        report.status
    );
    Ok(())
}

fn selftest_cmd(a: &SelftestArgs) -> Result<bool> {
    let results = match a.criterion {
        Some(id) if (1..=12).contains(&id) => vec![selftest::run_criterion(id)],
        Some(id) => return Err(Error::config(format!("no criterion {id}"))),
        None => selftest::run_all(),
    };
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    Ok(passed == results.len())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::ProductCheck(a) => product_check(a)?,
        Command::Height(a) => point_height(a, false)?,
        Command::OrbitHeight(a) => point_height(a, true)?,
        Command::CurveHeight(a) => curve_height_cmd(a)?,
        Command::PerturbCheck(a) => perturb_check(a)?,
        Command::Equidist(a) => equidist(a)?,
        Command::MinimaScan(a) => minima_scan(a)?,
        Command::ZhangScan(a) => zhang_scan(a)?,
        Command::Selftest(a) => return Ok(if selftest_cmd(a)? { 0 } else { 1 }),
    }
    Ok(0)
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("heightlab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_three() {
        assert_eq!(cli_dispatch(["heightlab", "no-such-command"]), 3);
        assert_eq!(cli_dispatch(["heightlab", "height", "--bogus"]), 3);
        assert_eq!(cli_dispatch(["heightlab", "--help"]), 0);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(cli_dispatch(["heightlab", "height", "--point", "rat:(0,0)"]), 1);
        assert_eq!(cli_dispatch(["heightlab", "height", "--point", "rat:(1,x)"]), 3);
        assert_eq!(cli_dispatch(["heightlab", "height", "--metric", "bogus", "--point", "rat:(1,1)"]), 3);
        assert_eq!(cli_dispatch(["heightlab", "equidist", "--schedule", "7,5"]), 3);
        assert_eq!(
            cli_dispatch(["heightlab", "curve-height", "--metric", "fs", "--exponents", "0,1,2,3", "--tol", "1e-30"]),
            2
        );
    }

    #[test]
    fn elements_parse() {
        assert!(matches!(parse_element("-12/35").unwrap(), BaseElement::Rational(_)));
        assert!(matches!(parse_element("ff:2:(0,1,1)/(1,0,0,1)").unwrap(), BaseElement::FunctionField { .. }));
        assert!(parse_element("0").is_err());
        assert!(parse_element("ff:6:(1)").is_err());
    }

    #[test]
    fn polyfit_is_exact_on_polynomials() {
        let x = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|t| 2.0 + 3.0 * t - t * t).collect();
        let c = polyfit(&x, &y, 2);
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] - 3.0).abs() < 1e-12 && (c[2] + 1.0).abs() < 1e-12);
    }
}
