//! CSV and legacy VTK writers. Numbers use six significant digits in `%g`
//! style so that output is stable byte-for-byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::ScalarField;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sweep::SweepTable;
use crate::validator::ReductionReport;

/// `printf("%.6g")`.
pub fn fmt_g(v: f64) -> String {
    fmt_g_prec(v, 6)
}

pub fn fmt_g_prec(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Sweep table: a header row of fracture lengths, a `beta` label row, then
/// one row per beta.
pub fn sweep_csv(t: &SweepTable) -> String {
    let mut s = String::new();
    let m = &t.meta;
    let _ = writeln!(s, "# geometry: {}", m.geometry);
    let _ = writeln!(s, "# q_baseline: {}", fmt_g(m.q_baseline));
    let _ = writeln!(s, "# pdd_star: {}", fmt_g(m.pdd_star));
    let _ = writeln!(s, "# j_star: {}", fmt_g(m.j_star));
    let _ = writeln!(s, "# mesh: {} nodes, {} triangles", m.mesh_nodes, m.mesh_triangles);
    let _ = writeln!(s, "# iterations: {} outer, {} picard", m.outer_iterations, m.picard_iterations);
    for f in &t.failures {
        let _ = writeln!(
            s,
            "# failed: beta={} L={}: {}",
            fmt_g(t.beta_values[f.beta_index]),
            fmt_g(t.l_values[f.l_index]),
            f.message.replace('\n', " ")
        );
    }
    s.push('L');
    for l in &t.l_values {
        s.push(',');
        s.push_str(&fmt_g(*l));
    }
    s.push_str("\nbeta\n");
    for (b, row) in t.beta_values.iter().zip(&t.j) {
        s.push_str(&fmt_g(*b));
        for v in row {
            s.push(',');
            s.push_str(&fmt_g(*v));
        }
        s.push('\n');
    }
    s
}

pub fn write_csv(t: &SweepTable, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &sweep_csv(t))
}

/// Parsed sweep CSV: `(l_values, beta_values, j)`.
pub type ParsedSweep = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

pub fn parse_sweep_csv(text: &str) -> Result<ParsedSweep> {
    let bad = |m: &str| Error::Config(format!("sweep csv: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| bad("missing header"))?;
    let mut cols = header.split(',');
    if cols.next() != Some("L") {
        return Err(bad("header must start with L"));
    }
    let l: Vec<f64> = cols.map(num).collect::<Result<_>>()?;
    if lines.next() != Some("beta") {
        return Err(bad("missing beta label row"));
    }
    let mut betas = Vec::new();
    let mut j = Vec::new();
    for line in lines {
        let mut cells = line.split(',');
        betas.push(num(cells.next().unwrap_or(""))?);
        let row: Vec<f64> = cells.map(num).collect::<Result<_>>()?;
        if row.len() != l.len() {
            return Err(bad("row length differs from header"));
        }
        j.push(row);
    }
    Ok((l, betas, j))
}

pub const REPORT_COLUMNS: &str = "flavor,h,q0,lhs,rhs,empirical_C,norm_Wx_full,norm_Wx_reduced,norm_Wy";

pub fn reports_csv(reports: &[ReductionReport], meta: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k}: {v}");
    }
    let _ = writeln!(
        s,
        "# norms: L^(3/2) of gradient components; face data extended constantly across the thickness for L^3"
    );
    s.push_str(REPORT_COLUMNS);
    s.push('\n');
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.flavor.name(),
            fmt_g(r.h),
            fmt_g(r.q0),
            fmt_g(r.lhs),
            fmt_g(r.rhs),
            fmt_g(r.empirical_c),
            fmt_g(r.norm_wx_full),
            fmt_g(r.norm_wx_reduced),
            fmt_g(r.norm_wy)
        );
    }
    s
}

pub fn write_reports_csv(reports: &[ReductionReport], meta: &[(&str, String)], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &reports_csv(reports, meta))
}

/// Legacy ASCII VTK unstructured grid with a `pressure` point scalar.
pub fn field_vtk(m: &Mesh, w: &ScalarField) -> Result<String> {
    if w.values.len() != m.num_nodes() {
        return Err(Error::Precondition(format!(
            "field has {} values but mesh has {} nodes",
            w.values.len(),
            m.num_nodes()
        )));
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nfracflow pressure\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", m.num_nodes());
    for p in &m.nodes {
        let _ = writeln!(s, "{} {} 0", fmt_g_prec(p[0], 12), fmt_g_prec(p[1], 12));
    }
    let nt = m.triangles.len();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in &m.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", m.num_nodes());
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for v in &w.values {
        s.push_str(&fmt_g_prec(*v, 12));
        s.push('\n');
    }
    Ok(s)
}

pub fn write_field_vtk(m: &Mesh, w: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let text = field_vtk(m, w)?;
    write_file(path.as_ref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_fracture_slab_mesh;
    use crate::sweep::SweepTable;

    #[test]
    fn g_format_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (1234567.0, "1.23457e+06"),
            (123456.0, "123456"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (1e-5, "1e-05"),
            (3.0741234, "3.07412"),
            (999999.5, "1e+06"),
            (0.1, "0.1"),
            (100.0, "100"),
        ];
        for (v, want) in cases {
            assert_eq!(fmt_g(v), want, "{v}");
        }
    }

    #[test]
    fn one_cell_table_layout() {
        let t = SweepTable::from_capacities(vec![10.0], vec![1e-5], vec![vec![2.23456789]], 1.0).unwrap();
        let text = sweep_csv(&t);
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["L,10", "beta", "1e-05,2.23457"]);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn csv_round_trip_six_digits() {
        let j = vec![vec![2.2345123, 2.6668999, 3.07], vec![1.1524, 1.14509876, 1e-7]];
        let t = SweepTable::from_capacities(vec![10.0, 20.0, 30.0], vec![1e-5, 0.1], j.clone(), 1.0).unwrap();
        let (l, b, got) = parse_sweep_csv(&sweep_csv(&t)).unwrap();
        assert_eq!(l, vec![10.0, 20.0, 30.0]);
        assert_eq!(b, vec![1e-5, 0.1]);
        for (r, g) in j.iter().flatten().zip(got.iter().flatten()) {
            assert!((r - g).abs() <= 5e-6 * r.abs(), "{r} vs {g}");
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let t = SweepTable::from_capacities(vec![10.0], vec![1e-5], vec![vec![2.0]], 1.0).unwrap();
        let err = write_csv(&t, "/nonexistent-dir/x/table.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent-dir/x/table.csv"));
    }

    #[test]
    fn vtk_counts_and_values() {
        let m = build_fracture_slab_mesh(1.0, 0.1, 2, 2).unwrap();
        let text = field_vtk(&m, &ScalarField::constant(&m, 1.5)).unwrap();
        assert!(text.contains("POINTS 9 double"));
        assert!(text.contains("CELLS 8 32"));
        let tail: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("LOOKUP_TABLE")).skip(1).collect();
        assert_eq!(tail.len(), 9);
        assert!(tail.iter().all(|l| *l == "1.5"));
        let short = ScalarField { values: vec![0.0; 3] };
        assert!(matches!(field_vtk(&m, &short), Err(Error::Precondition(_))));
    }
}
