//! Minimal static line charts with quartile bands, log-log axes.

use std::fmt::Write;

#[derive(Debug, Clone)]
pub struct Band {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    /// `(x, q1, median, q3)`, x ascending.
    pub points: Vec<(f64, f64, f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct LogAxis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl LogAxis {
    fn new(values: impl Iterator<Item = f64>, px_lo: f64, px_hi: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && *v > 0.0) {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        let l = v.max(1e-300).log10();
        self.px_lo + (l - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
        let mut out = Vec::new();
        for e in a..=b {
            for m in [1.0, 2.0, 5.0] {
                let v = m * 10f64.powi(e);
                let l = v.log10();
                if l >= self.lo - 1e-9 && l <= self.hi + 1e-9 {
                    out.push(v);
                }
            }
        }
        out
    }
}

fn fmt_tick(v: f64) -> String {
    if (1e-3..1e5).contains(&v.abs()) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

/// Render one panel. Non-positive or non-finite values are skipped.
pub fn render(title: &str, x_label: &str, y_label: &str, bands: &[Band]) -> String {
    let finite = |v: &f64| v.is_finite() && *v > 0.0;
    let xs = LogAxis::new(bands.iter().flat_map(|b| b.points.iter().map(|p| p.0)), LEFT, W - RIGHT);
    let ys = LogAxis::new(
        bands.iter().flat_map(|b| b.points.iter().flat_map(|p| [p.1, p.2, p.3])),
        H - BOTTOM,
        TOP,
    );
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title));
    for t in xs.ticks() {
        let x = xs.map(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            H - BOTTOM,
            H - BOTTOM + 16.0,
            fmt_tick(t)
        );
    }
    for t in ys.ticks() {
        let y = ys.map(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - RIGHT - LEFT,
        H - BOTTOM - TOP
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );
    for (i, b) in bands.iter().enumerate() {
        let pts: Vec<_> = b.points.iter().filter(|p| finite(&p.0) && finite(&p.1) && finite(&p.2) && finite(&p.3)).collect();
        if pts.len() >= 2 {
            let mut poly = String::new();
            for p in &pts {
                let _ = write!(poly, "{:.2},{:.2} ", xs.map(p.0), ys.map(p.3));
            }
            for p in pts.iter().rev() {
                let _ = write!(poly, "{:.2},{:.2} ", xs.map(p.0), ys.map(p.1));
            }
            let _ = writeln!(s, r#"<polygon points="{}" fill="{}" fill-opacity="0.18" stroke="none"/>"#, poly.trim_end(), b.color);
            let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", xs.map(p.0), ys.map(p.2))).collect();
            let dash = if b.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
                line.join(" "),
                b.color
            );
        }
        for p in &pts {
            let (x, y) = (xs.map(p.0), ys.map(p.2));
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"#, b.color);
            if pts.len() == 1 {
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{}"/>"#,
                    ys.map(p.1),
                    ys.map(p.3),
                    b.color
                );
            }
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = W - RIGHT + 14.0;
        let dash = if b.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            b.color,
            lx + 30.0,
            ly + 4.0,
            escape(&b.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
