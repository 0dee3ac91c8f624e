//! CSV and SVG emission of study reports.

use std::fmt::Write as _;

use super::study::{StudyReport, StudyRow};

/// CSV with a comment line carrying `fingerprint`, the header, one line per
/// row and a trailing comment block with the fits. Lines starting with `#`
/// are not numeric payload.
pub fn study_csv(report: &StudyReport, fingerprint: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# heavyflow {} study, config {fingerprint}", report.kind.name());
    let _ = writeln!(s, "{}", StudyRow::CSV_HEADER);
    for row in &report.rows {
        let _ = writeln!(s, "{}", row.csv_line());
    }
    for line in summary_lines(report) {
        let _ = writeln!(s, "# {line}");
    }
    s
}

/// Lines with the numeric payload only.
pub fn numeric_payload(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

pub fn summary_lines(report: &StudyReport) -> Vec<String> {
    let mut out: Vec<String> = report.fits.iter().map(|f| format!("fit {}", f.summary())).collect();
    if let Some(e) = &report.energy {
        out.push(format!(
            "energy: C = {:.4e}, max growth {:.4}: {}",
            e.constant,
            e.max_growth,
            if e.pass { "pass" } else { "fail" }
        ));
    }
    if let Some(c) = &report.certificates {
        out.push(format!(
            "certificates: C_f = {:.4e}, worst mean {:.2e}, worst div / 2C_f^2 {:.4}, worst Xi / C_f {:.4}: {}",
            c.bounds.c_f,
            c.worst_mean,
            c.worst_div_fraction,
            c.worst_xi_fraction,
            if c.pass { "pass" } else { "fail" }
        ));
    }
    if let Some(l) = &report.low_mach {
        out.push(format!(
            "low Mach: monotone {}, final ratio {:.4e}: {}",
            l.monotone,
            l.final_ratio,
            if l.pass { "pass" } else { "fail" }
        ));
        if let Some(f) = &l.flag {
            out.push(format!("low Mach: {f}"));
        }
    }
    out.extend(report.notes.iter().map(|n| format!("note: {n}")));
    out
}

/// Log-log plot of one quantity against `m` with its fitted line.
/// `None` when fewer than two points are positive.
pub fn loglog_svg(report: &StudyReport, quantity: &str, fingerprint: &str) -> Option<String> {
    let pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| Some((r.m, r.quantity(quantity)?)))
        .filter(|(m, v)| *m > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(m, v)| (m.log10(), v.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (w, h, pad) = (480.0, 360.0, 60.0);
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, "<!-- config {fingerprint} -->");
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {} H{} M{pad} {} V{pad}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log10 m</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">log10 {quantity}</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (v, pos) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(s, r#"<text x="{pos:.1}" y="{}" text-anchor="middle">{v:.2}</text>"#, h - pad + 18.0);
    }
    for (v, pos) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(s, r#"<text x="{}" y="{pos:.1}" text-anchor="end">{v:.2}</text>"#, pad - 6.0);
    }
    for (x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="steelblue"/>"#, sx(*x), sy(*y));
    }
    if let Some(f) = report.fit(quantity).and_then(|f| f.fit) {
        // Fit is in natural logs; the slope is the same in log10.
        let b = f.intercept / std::f64::consts::LN_10;
        let line = |x: f64| b + f.slope * x;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="firebrick"/>"#,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        );
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="end">slope {:.3}</text>"#, w - pad, f.slope);
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(x), b.max(x)));
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    }
}
