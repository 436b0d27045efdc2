//! Bare scatter plot with an optional fitted curve.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;

pub struct Chart<'a> {
    pub points: &'a [(f64, f64)],
    pub curve: Option<Box<dyn Fn(f64) -> f64 + 'a>>,
    pub log: bool,
    pub x_label: &'a str,
    pub y_label: &'a str,
}

impl Chart<'_> {
    pub fn render(&self) -> String {
        let tf = |v: f64| if self.log { v.ln() } else { v };
        let xs: Vec<f64> = self.points.iter().map(|p| tf(p.0)).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| tf(p.1)).collect();
        let span = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) }
        };
        let (x0, x1) = span(&xs);
        let (y0, y1) = span(&ys);
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(
            s,
            r#"<path d="M{PAD},{t} V{b} H{r}" fill="none" stroke="black"/>"#,
            t = PAD,
            b = H - PAD,
            r = W - PAD
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, self.x_label);
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
            H / 2.0,
            H / 2.0,
            self.y_label
        );
        for (v, x) in [(x0, px(x0)), (x1, px(x1))] {
            let shown = if self.log { v.exp() } else { v };
            let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{shown:.3}</text>"#, H - PAD + 14.0);
        }
        for (v, y) in [(y0, py(y0)), (y1, py(y1))] {
            let shown = if self.log { v.exp() } else { v };
            let _ = writeln!(s, r#"<text x="{}" y="{y:.1}" text-anchor="end">{shown:.3e}</text>"#, PAD - 4.0);
        }
        for (x, y) in xs.iter().zip(&ys) {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#, px(*x), py(*y));
        }
        if let Some(f) = &self.curve {
            let mut d = String::new();
            for k in 0..=100 {
                let x = x0 + (x1 - x0) * k as f64 / 100.0;
                let raw_x = if self.log { x.exp() } else { x };
                let y = tf(f(raw_x));
                if y.is_finite() {
                    let _ = write!(d, "{}{:.1},{:.1} ", if d.is_empty() { "M" } else { "L" }, px(x), py(y));
                }
            }
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="firebrick"/>"#, d.trim_end());
        }
        s.push_str("</svg>\n");
        s
    }
}
