//! Minimal standalone SVG line/scatter plots. The CSVs are the contract;
//! these are a convenience for eyeballing them.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: &[&str] = &["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Series {
    pub name: String,
    /// `(x, y, optional error bar half-width)`
    pub points: Vec<(f64, f64, Option<f64>)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y, e) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    continue;
                }
                xs.push(tx(x));
                let e = e.unwrap_or(0.0);
                ys.push(ty(y - e));
                ys.push(ty(y + e));
                ys.push(ty(y));
            }
        }
        ys.retain(|v| v.is_finite());
        let range = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = range(&xs);
        let (y0, y1) = range(&ys);
        let px = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (ty(y) - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (W - RIGHT + LEFT) / 2.0, escape(&self.title));
        let (ax0, ax1, ay0, ay1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(out, r#"<rect x="{ax0}" y="{ay0}" width="{}" height="{}" fill="none" stroke="black"/>"#, ax1 - ax0, ay1 - ay0);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let xl = if self.log_x { format!("{:.3}", 10f64.powf(xv)) } else { format!("{xv:.3}") };
            let yl = if self.log_y { format!("{:.3e}", 10f64.powf(yv)) } else { format!("{yv:.3}") };
            let gx = ax0 + f * (ax1 - ax0);
            let gy = ay1 - f * (ay1 - ay0);
            let _ = writeln!(out, r#"<text x="{gx}" y="{}" text-anchor="middle">{xl}</text>"#, ay1 + 16.0);
            let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{yl}</text>"#, ax0 - 4.0, gy + 4.0);
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ax0 + ax1) / 2.0, H - 12.0, escape(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            (ay0 + ay1) / 2.0,
            (ay0 + ay1) / 2.0,
            escape(&self.y_label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<(f64, f64, Option<f64>)> = s.points.iter().copied().filter(|(x, y, _)| x.is_finite() && y.is_finite()).collect();
            let path: Vec<String> = pts.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            if path.len() > 1 {
                let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
            }
            for &(x, y, e) in &pts {
                if let Some(e) = e {
                    let (lo, hi) = (py(y - e), py(y + e));
                    if lo.is_finite() && hi.is_finite() {
                        let _ = writeln!(out, r#"<line x1="{0:.2}" y1="{lo:.2}" x2="{0:.2}" y2="{hi:.2}" stroke="{color}"/>"#, px(x));
                    }
                }
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
            }
            let ly = ay0 + 10.0 + 18.0 * i as f64;
            let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#, ax1 + 14.0, ly);
            let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, ax1 + 24.0, ly + 4.0, escape(&s.name));
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_points_and_legend() {
        let p = Plot {
            title: "a < b".into(),
            x_label: "d".into(),
            y_label: "calls".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                name: "run".into(),
                points: vec![(4.0, 100.0, None), (8.0, 210.0, Some(10.0)), (16.0, f64::NAN, None)],
            }],
        };
        let svg = p.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(!svg.contains("NaN"));
    }
}
