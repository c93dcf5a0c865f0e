//! Minimal static SVG figures: line plots on linear or log axes, and planar
//! curves drawn segment by segment.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const PANEL: f64 = 360.0;
const MARGIN: [f64; 4] = [60.0, 20.0, 40.0, 50.0]; // left, right, top, bottom

pub const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<[f64; 2]>,
    pub color: &'static str,
    pub dashed: bool,
    pub markers: bool,
}

impl Series {
    pub fn line(label: &str, points: Vec<[f64; 2]>, color: &'static str) -> Self {
        Self {
            label: label.to_string(),
            points,
            color,
            dashed: false,
            markers: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn with_markers(mut self) -> Self {
        self.markers = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            ..Default::default()
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn add(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn tx(&self, x: f64) -> f64 {
        if self.log_x {
            x.log10()
        } else {
            x
        }
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .map(|p| [self.tx(p[0]), p[1]])
            .filter(|p| p[0].is_finite() && p[1].is_finite());
        let mut any = false;
        let mut xr = [f64::INFINITY, f64::NEG_INFINITY];
        let mut yr = xr;
        for p in pts {
            any = true;
            xr = [xr[0].min(p[0]), xr[1].max(p[0])];
            yr = [yr[0].min(p[1]), yr[1].max(p[1])];
        }
        if !any {
            return None;
        }
        let pad = |r: [f64; 2]| {
            let w = r[1] - r[0];
            let d = if w > 0.0 {
                0.05 * w
            } else {
                0.5 * r[0].abs().max(1.0)
            };
            [r[0] - d, r[1] + d]
        };
        Some((pad(xr), pad(yr)))
    }

    fn render(&self, out: &mut String, top: f64) {
        let [ml, mr, mt, mb] = MARGIN;
        let (x0, y0) = (ml, top + mt);
        let (w, h) = (WIDTH - ml - mr, PANEL - mt - mb);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
            x0 + w / 2.0,
            top + 24.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
            x0 + w / 2.0,
            y0 + h + 36.0,
            escape(&self.xlabel)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {:.1})">{}</text>"#,
            y0 + h / 2.0,
            y0 + h / 2.0,
            escape(&self.ylabel)
        );
        let Some((xr, yr)) = self.bounds() else {
            return;
        };
        let sx = |x: f64| x0 + (self.tx(x) - xr[0]) / (xr[1] - xr[0]) * w;
        let sy = |y: f64| y0 + h - (y - yr[0]) / (yr[1] - yr[0]) * h;
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = xr[0] + f * (xr[1] - xr[0]);
            let label = if self.log_x {
                format!("{:.3e}", 10f64.powf(xv))
            } else {
                format!("{xv:.3}")
            };
            let px = x0 + f * w;
            let _ = writeln!(
                out,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle" font-size="10">{label}</text>"#,
                y0 + h + 16.0
            );
            let yv = yr[0] + f * (yr[1] - yr[0]);
            let py = y0 + h - f * h;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
                x0 - 4.0,
                py + 3.0,
                fmt_tick(yv)
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| self.tx(p[0]).is_finite() && p[1].is_finite())
                .map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1])))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let dash = if s.dashed {
                r#" stroke-dasharray="6,4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                pts.join(" "),
                s.color
            );
            if s.markers {
                for p in &pts {
                    let (cx, cy) = p.split_once(',').unwrap();
                    let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{}"/>"#, s.color);
                }
            }
            let ly = y0 + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}"{dash}/>"#,
                x0 + w - 150.0,
                x0 + w - 130.0,
                s.color
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
                x0 + w - 125.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// Plots stacked vertically in one document.
pub fn figure(plots: &[Plot]) -> String {
    let mut body = String::new();
    for (k, p) in plots.iter().enumerate() {
        p.render(&mut body, k as f64 * PANEL);
    }
    document(WIDTH, PANEL * plots.len().max(1) as f64, &body)
}

/// A closed curve drawn as segments colored by a per-node class, with an
/// optional reference curve underneath. Aspect ratio is preserved.
pub fn closed_curve(
    title: &str,
    points: &[[f64; 2]],
    class: &[usize],
    reference: Option<&[[f64; 2]]>,
) -> String {
    let size = WIDTH;
    let pad = 40.0;
    let all = points.iter().chain(reference.unwrap_or(&[]));
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (size - 2.0 * pad) / span;
    let map = |p: [f64; 2]| {
        let x = pad + (p[0] - lo[0]) * scale + 0.5 * (span - (hi[0] - lo[0])) * scale;
        let y = size - pad - (p[1] - lo[1]) * scale - 0.5 * (span - (hi[1] - lo[1])) * scale;
        (x, y)
    };
    let mut body = String::new();
    let _ = writeln!(
        body,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        size / 2.0,
        escape(title)
    );
    if let Some(r) = reference {
        let pts: Vec<String> = r
            .iter()
            .chain(r.first())
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            body,
            r##"<polyline points="{}" fill="none" stroke="#bbb" stroke-width="1" stroke-dasharray="4,3"/>"##,
            pts.join(" ")
        );
    }
    // Consecutive nodes of one class form one polyline.
    let n = points.len();
    let mut k = 0;
    while k < n {
        let c = class[k];
        let mut pts = vec![map(points[k])];
        let mut j = k;
        while j < n && class[j] == c {
            pts.push(map(points[(j + 1) % n]));
            j += 1;
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            body,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2.5"/>"#,
            coords.join(" "),
            PALETTE[c % PALETTE.len()]
        );
        k = j;
    }
    document(size, size, &body)
}
