//! Minimal SVG line charts, rendered from CSV text alone.

use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{anyhow, Result};

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// What to plot from a CSV file.
#[derive(Debug, Clone)]
pub struct ChartSpec<'a> {
    pub title: &'a str,
    pub x: &'a str,
    pub y: &'a str,
    /// One curve per distinct value of this column.
    pub series: &'a str,
    /// Keep only rows where the column equals the value.
    pub filter: Option<(&'a str, &'a str)>,
}

/// Renders one polyline per series; rows with a non-numeric x or y are skipped.
pub fn render(csv_text: &str, spec: &ChartSpec) -> Result<String> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("CSV has no column {name}"))
    };
    let (xi, yi, si) = (col(spec.x)?, col(spec.y)?, col(spec.series)?);
    let fi = spec.filter.map(|(c, v)| col(c).map(|i| (i, v))).transpose()?;
    // Series keep their first-appearance order.
    let mut order: Vec<String> = Vec::new();
    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec?;
        if let Some((i, v)) = fi {
            if &rec[i] != v {
                continue;
            }
        }
        let (Ok(x), Ok(y)) = (rec[xi].parse::<f64>(), rec[yi].parse::<f64>()) else {
            continue;
        };
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let s = rec[si].to_string();
        if !curves.contains_key(&s) {
            order.push(s.clone());
        }
        curves.entry(s).or_default().push((x, y));
    }
    let pts = curves.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#)?;
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(spec.title))?;
    writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    )?;
    for (v, x, y, anchor) in [
        (x0, sx(x0), H - MARGIN + 16.0, "start"),
        (x1, sx(x1), H - MARGIN + 16.0, "end"),
    ] {
        writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-size="11">{v:.3}</text>"#)?;
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{v:.3}</text>"#, MARGIN - 4.0, y + 4.0)?;
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 10.0, escape(spec.x))?;
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(spec.y)
    )?;
    for (i, name) in order.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = curves[name].iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.2"/>"#, path.join(" "))?;
        let ly = MARGIN + 14.0 * i as f64;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="11" fill="{color}">{} = {}</text>"#,
            W - MARGIN - 110.0,
            escape(spec.series),
            escape(name)
        )?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let csv = "k,x,y,s\ng,0,1,a\ng,1,2,a\nq,5,5,a\ng,0,0,b\ng,1,x,b\n";
        let spec = ChartSpec {
            title: "t",
            x: "x",
            y: "y",
            series: "s",
            filter: Some(("k", "g")),
        };
        let svg = render(csv, &spec).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("s = b"));
        assert_eq!(svg, render(csv, &spec).unwrap());
        assert!(render(csv, &ChartSpec { y: "zz", ..spec }).is_err());
    }
}
