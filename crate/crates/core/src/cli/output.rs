//! CSV time series and static SVG plots.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::monitors::MonitorRecord;

/// Bumped whenever [`COLUMNS`] changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: &[&str] = &[
    "t",
    "u_inf",
    "u_l2",
    "grad_ut_l2",
    "lap_u_l2",
    "grad_utt_l2",
    "lap_ut_l2",
    "y",
    "y_prime",
    "F_N",
    "F_N_gap",
    "F2",
    "F2_gap",
    "r01",
    "r02",
    "r41",
    "jensen_gap",
    "odi_slack",
    "regime_flag",
];

pub const RATE_COLUMNS: &[&str] = &["t", "dF_N_dt", "dF_N_dt_bound"];

/// Shortest round-trip decimal form; `NaN` for missing values.
fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:?}")
    }
}

pub fn column_values(r: &MonitorRecord) -> [f64; 19] {
    [
        r.t,
        r.u_inf,
        r.u_l2,
        r.grad_ut,
        r.lap_u,
        r.grad_utt,
        r.lap_ut,
        r.y,
        r.dy,
        r.f_n,
        r.f_n_gap,
        r.f2,
        r.f2_gap,
        r.r01,
        r.r02,
        r.r41,
        r.jensen_gap,
        r.odi_slack,
        if r.in_regime { 1.0 } else { 0.0 },
    ]
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_csv(records: &[MonitorRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let rows = records.iter().map(|r| {
        let v = column_values(r);
        let mut row: Vec<String> = v[..18].iter().map(|x| num(*x)).collect();
        row.push(if r.in_regime { "1".into() } else { "0".into() });
        row
    });
    write_rows(&mut buf, COLUMNS, rows)?;
    Ok(buf)
}

pub fn rate_csv(records: &[MonitorRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let rows = records.iter().map(|r| vec![num(r.t), num(r.f_n_rate), num(r.f_n_rate_bound)]);
    write_rows(&mut buf, RATE_COLUMNS, rows)?;
    Ok(buf)
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(file), header, rows.iter().cloned())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A self-contained SVG line plot of `ys` against `xs`; non-finite points are skipped.
pub fn svg_line_plot(title: &str, x_label: &str, xs: &[f64], ys: &[f64]) -> String {
    let (w, h) = (640.0, 400.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(x, y)| (*x, *y)).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        escape(title)
    );
    let (x0, x1) = span(pts.iter().map(|p| p.0));
    let (y0, y1) = span(pts.iter().map(|p| p.1));
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));
    for (label, anchor, x, y) in [
        (num_label(x0), "start", ml, h - mb + 18.0),
        (num_label(x1), "end", w - mr, h - mb + 18.0),
        (num_label(y0), "end", ml - 6.0, h - mb),
        (num_label(y1), "end", ml - 6.0, mt + 10.0),
    ] {
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>\n"
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        w / 2.0,
        h - 12.0,
        escape(x_label)
    ));
    if !pts.is_empty() {
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 + 1e-12 * lo.abs() {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn num_label(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e4) {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> MonitorRecord {
        MonitorRecord {
            t,
            u_inf: 0.1 + t,
            u_l2: 0.0,
            grad_ut: 0.0,
            lap_u: 0.0,
            grad_utt: 0.0,
            lap_ut: 0.0,
            y: 1.0 / 3.0,
            dy: 0.0,
            f_n: 0.0,
            f_n_gap: 0.0,
            f2: 0.0,
            f2_gap: 0.0,
            r01: 0.0,
            r02: 0.0,
            r41: 0.0,
            scale01: 0.0,
            scale02: 0.0,
            scale41: 0.0,
            jensen_gap: f64::NAN,
            odi_slack: f64::NAN,
            in_regime: false,
            f_n_rate: 0.0,
            f_n_rate_bound: 0.0,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let bytes = run_csv(&[record(0.0), record(0.01)]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), COLUMNS.len());
        assert_eq!(row[7].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(row[16], "NaN");
        assert_eq!(row[18], "0");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_line_plot("u <inf>", "t", &[0.0, 1.0, 2.0], &[1.0, f64::NAN, 3.0]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("u &lt;inf&gt;"));
        assert!(s.contains("<polyline"));
        let flat = svg_line_plot("flat", "t", &[0.0, 1.0], &[2.0, 2.0]);
        assert!(!flat.contains("NaN"));
    }
}
