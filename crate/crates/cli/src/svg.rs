//! Minimal SVG figures: scatter plots, curves, histograms and heat maps.

use std::fmt::Write;

use frv_core::Complex;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

/// Data rectangle mapped onto the drawing area.
pub struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    body: String,
}

impl Frame {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self {
            x0,
            x1,
            y0,
            y1,
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn points(&mut self, pts: &[Complex], color: &str) {
        let _ = writeln!(self.body, r#"<g fill="{color}" fill-opacity="0.5">"#);
        for z in pts {
            let _ = writeln!(self.body, r#"<circle cx="{:.2}" cy="{:.2}" r="0.9"/>"#, self.px(z.re), self.py(z.im));
        }
        self.body.push_str("</g>\n");
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }

    /// Bars `[left, right) x [0, height)`.
    pub fn bars(&mut self, bars: &[(f64, f64, f64)], color: &str) {
        let _ = writeln!(self.body, r#"<g fill="{color}" fill-opacity="0.6" stroke="white" stroke-width="0.5">"#);
        for &(l, r, h) in bars {
            let (x, y) = (self.px(l), self.py(h));
            let _ = writeln!(
                self.body,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}"/>"#,
                self.px(r) - x,
                self.py(0.0) - y
            );
        }
        self.body.push_str("</g>\n");
    }

    /// Cells with opacity proportional to `value / max`.
    pub fn cells(&mut self, cells: &[(f64, f64, f64, f64, f64)], max: f64) {
        self.body.push_str("<g fill=\"#b2182b\">\n");
        for &(x0, x1, y0, y1, v) in cells {
            if v <= 0.0 {
                continue;
            }
            let (l, t) = (self.px(x0), self.py(y1));
            let _ = writeln!(
                self.body,
                r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill-opacity="{:.3}"/>"#,
                self.px(x1) - l,
                self.py(y0) - t,
                (v / max).min(1.0)
            );
        }
        self.body.push_str("</g>\n");
    }

    pub fn render(self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        s.push_str(&self.body);
        let (xl, xr, yb, yt) = (self.x0, self.x1, self.y0, self.y1);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(ylabel)
        );
        for (v, x, y, anchor) in [
            (xl, MARGIN, HEIGHT - MARGIN + 16.0, "start"),
            (xr, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end"),
            (yb, MARGIN - 4.0, HEIGHT - MARGIN, "end"),
            (yt, MARGIN - 4.0, MARGIN + 10.0, "end"),
        ] {
            let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3}</text>"#);
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_maps_corners() {
        let f = Frame::new(-1.0, 1.0, 0.0, 2.0);
        assert_eq!(f.px(-1.0), MARGIN);
        assert_eq!(f.px(1.0), WIDTH - MARGIN);
        assert_eq!(f.py(0.0), HEIGHT - MARGIN);
        assert_eq!(f.py(2.0), MARGIN);
        let svg = f.render("a<b", "x", "y");
        assert!(svg.starts_with("<svg") && svg.contains("a&lt;b"));
    }
}
