//! A small SVG plotter: axes with ticks, histogram bars and polylines.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 5] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

#[derive(Debug, Clone)]
pub struct Bar {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub bars: Vec<Bar>,
    pub bar_label: String,
    pub lines: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let fx = |x: f64| if self.log_x { x.log10() } else { x };
        let finite = |x: f64, y: f64| fx(x).is_finite() && y.is_finite();
        let xs = self
            .bars
            .iter()
            .flat_map(|b| [b.lo, b.hi])
            .chain(
                self.lines
                    .iter()
                    .flat_map(|s| s.points.iter().filter(|p| finite(p.0, p.1)).map(|p| p.0)),
            )
            .map(fx)
            .filter(|v| v.is_finite());
        let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !(x1 > x0) {
            (x0, x1) = (x0.min(0.0) - 1.0, x1.max(0.0) + 1.0);
        }
        let y1 = self
            .bars
            .iter()
            .map(|b| b.height)
            .chain(
                self.lines
                    .iter()
                    .flat_map(|s| s.points.iter().filter(|p| finite(p.0, p.1)).map(|p| p.1)),
            )
            .fold(0.0f64, f64::max);
        let y1 = if y1 > 0.0 { 1.05 * y1 } else { 1.0 };

        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |u: f64| LEFT + (u - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - y.clamp(0.0, y1) / y1 * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        for b in &self.bars {
            let (a, c) = (fx(b.lo), fx(b.hi));
            if !(a.is_finite() && c.is_finite() && b.height.is_finite()) {
                continue;
            }
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#bbbbbb" stroke="#888888" stroke-width="0.5"/>"##,
                sx(a),
                sy(b.height),
                (sx(c) - sx(a)).max(0.0),
                (sy(0.0) - sy(b.height)).max(0.0)
            );
        }
        for (k, series) in self.lines.iter().enumerate() {
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| finite(p.0, p.1))
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(fx(x)), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                COLORS[k % COLORS.len()],
                pts.join(" ")
            );
        }

        // axes
        let _ = writeln!(
            s,
            r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
            TOP + ph,
            LEFT + pw
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let text = if self.log_x { label(10f64.powf(t)) } else { label(t) };
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{text}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        for t in ticks(0.0, y1) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        // legend
        let mut ly = TOP + 12.0;
        let lx = LEFT + pw - 170.0;
        if !self.bars.is_empty() {
            let _ = writeln!(
                s,
                r##"<rect x="{lx}" y="{}" width="14" height="10" fill="#bbbbbb"/><text x="{}" y="{ly}">{}</text>"##,
                ly - 9.0,
                lx + 20.0,
                escape(&self.bar_label)
            );
            ly += 16.0;
        }
        for (k, series) in self.lines.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/><text x="{}" y="{ly}">{}</text>"#,
                ly - 4.0,
                lx + 14.0,
                ly - 4.0,
                COLORS[k % COLORS.len()],
                lx + 20.0,
                escape(&series.label)
            );
            ly += 16.0;
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps_are_round() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(k, v)| (v - 0.2 * k as f64).abs() < 1e-12));
        assert_eq!(ticks(-1.0, 1.0).len(), 5);
    }

    #[test]
    fn renders_bars_lines_and_legend() {
        let plot = Plot {
            title: "a < b".into(),
            bars: vec![
                Bar {
                    lo: 0.0,
                    hi: 0.5,
                    height: 1.0,
                },
                Bar {
                    lo: 0.5,
                    hi: 1.0,
                    height: 0.5,
                },
            ],
            bar_label: "mc".into(),
            lines: vec![Series {
                label: "exact".into(),
                points: vec![(0.0, 1.0), (0.5, f64::NAN), (1.0, 0.4)],
            }],
            ..Plot::default()
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("NaN"));
    }
}
