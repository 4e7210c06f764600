//! Minimal SVG scatter plots.

use std::fmt::Write as _;

pub struct ScatterPlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: &'a [(f64, f64)],
    /// Optional line y = a + b x drawn across the x range.
    pub line: Option<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl ScatterPlot<'_> {
    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if let Some((a, b)) = self.line {
            for x in [x0, x1] {
                let y = a + b * x;
                if y.is_finite() {
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * M,
            H - 2.0 * M
        )
        .unwrap();
        writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(self.title)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, H - 12.0, escape(self.x_label))
            .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(self.y_label)
        )
        .unwrap();
        for (v, xx, yy, anchor) in [
            (x0, px(x0), H - M + 16.0, "start"),
            (x1, px(x1), H - M + 16.0, "end"),
        ] {
            writeln!(s, r#"<text x="{xx}" y="{yy}" text-anchor="{anchor}" font-size="11">{v:.3}</text>"#).unwrap();
        }
        for (v, yy) in [(y0, py(y0)), (y1, py(y1) + 10.0)] {
            writeln!(s, r#"<text x="{}" y="{yy}" text-anchor="end" font-size="11">{v:.3}</text>"#, M - 4.0).unwrap();
        }
        for &(x, y) in &pts {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(x), py(y)).unwrap();
        }
        if let Some((a, b)) = self.line {
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="1.5"/>"#,
                px(x0),
                py(a + b * x0),
                px(x1),
                py(a + b * x1)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}
