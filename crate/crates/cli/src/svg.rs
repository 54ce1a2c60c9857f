//! Bifurcation diagrams as standalone SVG.
//!
//! λ runs along the horizontal axis and the branch norm along the vertical
//! one. Reference eigenvalues are drawn as dashed vertical lines. Branch `i`
//! in the input takes color `PALETTE[i % PALETTE.len()]`.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// `(λ, norm)` pairs in drawing order.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Diagram {
    pub title: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// `(label, λ)` of each dashed marker.
    pub asymptotes: Vec<(String, f64)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fraction(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo) / (self.hi - self.lo)
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }
}

/// Ticks at 1, 2 or 5 times a power of ten, about `target` of them.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|i| i as f64 * step).collect(), decimals)
}

pub fn render(d: &Diagram) -> String {
    let values = d.series.iter().flat_map(|s| s.points.iter());
    let mut xs: Vec<f64> = values.clone().map(|p| p.0).collect();
    xs.extend(d.asymptotes.iter().map(|a| a.1));
    let ys: Vec<f64> = values
        .map(|p| p.1)
        .filter(|y| y.is_finite() && (!d.log_y || *y > 0.0))
        .collect();
    let (mut x0, mut x1) = min_max(&xs).unwrap_or((0.0, 1.0));
    let pad = 0.05 * (x1 - x0).max(1e-9 * x1.abs().max(1.0));
    x0 -= pad;
    x1 += pad;
    let x = Axis {
        lo: x0,
        hi: x1,
        log: false,
    };
    let y = match (min_max(&ys), d.log_y) {
        (Some((lo, hi)), true) => Axis {
            lo: lo.log10().floor(),
            hi: hi.log10().ceil().max(lo.log10().floor() + 1.0),
            log: true,
        },
        (Some((_, hi)), false) => Axis {
            lo: 0.0,
            hi: if hi > 0.0 { 1.05 * hi } else { 1.0 },
            log: false,
        },
        (None, log) => Axis {
            lo: 0.0,
            hi: 1.0,
            log,
        },
    };
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |v: f64| LEFT + x.fraction(v) * pw;
    let py = |v: f64| TOP + (1.0 - y.fraction(v)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&d.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let (ticks, decimals) = nice_ticks(x.lo, x.hi, 8);
    for t in ticks {
        let xp = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{t:.decimals$}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 19.0
        );
    }
    let y_ticks: Vec<(f64, String)> = if y.log {
        (y.lo as i64..=y.hi as i64)
            .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
            .collect()
    } else {
        let (t, dec) = nice_ticks(y.lo, y.hi, 6);
        t.into_iter().map(|v| (v, format!("{v:.dec$}"))).collect()
    };
    for (v, label) in y_ticks {
        let yp = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">λ</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&d.y_label)
    );

    for (label, lambda) in &d.asymptotes {
        let xp = px(*lambda);
        let _ = writeln!(
            s,
            r##"<line x1="{xp:.2}" y1="{TOP}" x2="{xp:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" fill="#555555">{}</text>"##,
            TOP + ph,
            xp + 3.0,
            TOP + 14.0,
            escape(label)
        );
    }

    for (i, series) in d.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.1.is_finite() && (!y.log || p.1 > 0.0))
            .map(|&(l, n)| format!("{:.2},{:.2}", px(l), py(n)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#);
        }
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn min_max(v: &[f64]) -> Option<(f64, f64)> {
    let mut it = v.iter().copied().filter(|x| x.is_finite());
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(log_y: bool) -> Diagram {
        Diagram {
            title: "test".into(),
            y_label: "norm".into(),
            log_y,
            series: vec![
                Series {
                    label: "k = 1".into(),
                    points: vec![(12.0, 0.5), (10.0, 0.1)],
                },
                Series {
                    label: "k = 2".into(),
                    points: vec![(45.0, 0.7), (40.0, 0.2)],
                },
            ],
            asymptotes: vec![("λ1".into(), 9.87), ("λ2".into(), 39.48)],
        }
    }

    #[test]
    fn renders_curves_markers_and_legend() {
        let svg = render(&diagram(false));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains(PALETTE[0]) && svg.contains(PALETTE[1]));
        assert!(svg.contains("k = 2"));
        assert_eq!(render(&diagram(false)), svg);
    }

    #[test]
    fn log_axis_has_decade_labels() {
        let svg = render(&diagram(true));
        assert!(svg.contains(">1e-1<") && svg.contains(">1e0<"));
    }

    #[test]
    fn tick_steps() {
        let (t, d) = nice_ticks(0.0, 10.0, 5);
        assert_eq!(t, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(d, 0);
        let (_, d) = nice_ticks(0.0, 0.3, 6);
        assert_eq!(d, 2);
    }
}
