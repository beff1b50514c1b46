//! CSV and JSON emission. Floats use 17 significant digits (`{:.16e}`),
//! which round-trips every f64.

use std::io::Write;

use serde_json::Value;

use crate::experiment::ReportRow;

pub const CSV_HEADER: &str = "family,N,orbit_size,degree,height,normalized_height,smallness_value,moment_index,moment_re,moment_im,oracle_re,oracle_im,abs_error,genericity_fraction";

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// The provenance line written above every table: `# {json}`.
pub fn header_line(provenance: &Value) -> String {
    format!("# {provenance}")
}

pub fn csv_row(r: &ReportRow) -> String {
    [
        r.family.to_string(),
        r.n.to_string(),
        r.orbit_size.to_string(),
        r.degree.to_string(),
        fmt_float(r.height),
        fmt_float(r.normalized_height),
        fmt_float(r.smallness_value),
        r.moment_index.to_string(),
        fmt_float(r.moment.re),
        fmt_float(r.moment.im),
        fmt_float(r.oracle.re),
        fmt_float(r.oracle.im),
        fmt_float(r.abs_error),
        fmt_float(r.genericity_fraction),
    ]
    .join(",")
}

pub fn write_csv(w: &mut dyn Write, provenance: &Value, rows: &[ReportRow]) -> std::io::Result<()> {
    writeln!(w, "{}", header_line(provenance))?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

/// A generic table with the same provenance convention.
pub fn write_table(w: &mut dyn Write, provenance: &Value, header: &str, rows: &[String]) -> std::io::Result<()> {
    writeln!(w, "{}", header_line(provenance))?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// JSON documents carry the provenance under `config`.
pub fn write_json(w: &mut dyn Write, provenance: &Value, body: Value) -> std::io::Result<()> {
    let doc = serde_json::json!({ "config": provenance, "result": body });
    writeln!(w, "{}", serde_json::to_string_pretty(&doc).expect("json values serialize"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn header_has_fourteen_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 14);
        let r = ReportRow {
            family: "torsion-points",
            n: 5,
            orbit_size: 4,
            degree: 4,
            height: 0.0,
            normalized_height: 0.0,
            smallness_value: 0.0,
            moment_index: 1,
            moment: Complex64::new(-0.25, 0.0),
            oracle: Complex64::new(-0.25, 0.0),
            abs_error: 0.0,
            genericity_fraction: 0.0,
        };
        let line = csv_row(&r);
        assert_eq!(line.split(',').count(), 14);
        assert!(line.starts_with("torsion-points,5,4,4,0.0000000000000000e0,"));
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let back: f64 = fmt_float(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
