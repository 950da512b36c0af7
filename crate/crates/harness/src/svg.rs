//! Minimal self-contained SVG line plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Half-width of a shaded band around the line.
    pub band: Option<Vec<f64>>,
    /// Draw markers only.
    pub scatter: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            xs,
            ys,
            band: None,
            scatter: false,
        }
    }

    pub fn with_band(mut self, band: Vec<f64>) -> Self {
        self.band = Some(band);
        self
    }

    pub fn points(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            scatter: true,
            ..Series::line(label, xs, ys)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { if v > 0.0 { v.log10() } else { continue } } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v > 0.0 {
                v.log10()
            } else {
                return None;
            }
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                let label = if self.log { format!("1e{t:.1}") } else { format!("{t:.3}") };
                (i as f64 / 4.0, label)
            })
            .collect()
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let xa = Axis::fit(self.series.iter().flat_map(|s| s.xs.iter().copied()), self.log_x);
        let ya = Axis::fit(
            self.series.iter().flat_map(|s| {
                let band = s.band.clone().unwrap_or_else(|| vec![0.0; s.ys.len()]);
                s.ys.iter()
                    .zip(band)
                    .flat_map(|(y, b)| [y - b, y + b])
                    .collect::<Vec<_>>()
            }),
            self.log_y,
        );
        let px = |v: f64| xa.frac(v).map(|f| LEFT + f * pw);
        let py = |v: f64| ya.frac(v).map(|f| TOP + (1.0 - f) * ph);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">
<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>
<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
            LEFT + pw / 2.0,
            esc(&self.title)
        );
        for (f, label) in xa.ticks() {
            let x = LEFT + f * pw;
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        for (f, label) in ya.ticks() {
            let y = TOP + (1.0 - f) * ph;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>
<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            LEFT + pw / 2.0,
            H - 10.0,
            esc(&self.x_label),
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if let Some(band) = &s.band {
                let upper: Vec<(f64, f64)> = s
                    .xs
                    .iter()
                    .zip(s.ys.iter().zip(band))
                    .filter_map(|(x, (y, b))| Some((px(*x)?, py(y + b)?)))
                    .collect();
                let lower: Vec<(f64, f64)> = s
                    .xs
                    .iter()
                    .zip(s.ys.iter().zip(band))
                    .filter_map(|(x, (y, b))| Some((px(*x)?, py(y - b)?)))
                    .collect();
                if !upper.is_empty() && upper.len() == lower.len() {
                    let pts: Vec<String> = upper
                        .iter()
                        .chain(lower.iter().rev())
                        .map(|(x, y)| format!("{x:.2},{y:.2}"))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                        pts.join(" ")
                    );
                }
            }
            let pts: Vec<(f64, f64)> = s
                .xs
                .iter()
                .zip(&s.ys)
                .filter_map(|(x, y)| Some((px(*x)?, py(*y)?)))
                .collect();
            if s.scatter {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#);
                }
            } else if !pts.is_empty() {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                    path.join(" ")
                );
            }
            let ly = TOP + 12.0 + 16.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx:.1}" y="{:.1}" width="14" height="4" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                ly - 4.0,
                lx + 20.0,
                ly + 1.0,
                esc(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Stacks plots vertically in one document.
pub fn stack(plots: &[Plot]) -> String {
    let mut out = String::new();
    let total = H * plots.len() as f64;
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total}" viewBox="0 0 {W} {total}">"#
    );
    for (i, p) in plots.iter().enumerate() {
        let inner = p.render();
        let body = inner
            .lines()
            .filter(|l| !l.starts_with("<?xml"))
            .collect::<Vec<_>>()
            .join("\n");
        let _ = writeln!(out, r#"<g transform="translate(0 {})">"#, H * i as f64);
        out.push_str(&body);
        out.push_str("\n</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
