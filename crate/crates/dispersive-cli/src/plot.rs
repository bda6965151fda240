//! Log–log scatter plots with fitted lines, written as plain SVG.

use std::fmt::Write;

use dispersive::norm_estimation::DecayFit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitLine {
    pub intercept: f64,
    pub slope: f64,
    pub log_power: f64,
}

impl FitLine {
    pub fn eval(&self, x: f64) -> f64 {
        let mut y = self.intercept + self.slope * x.ln();
        if self.log_power != 0.0 {
            y += self.log_power * (1.0 + x).ln().ln();
        }
        y.exp()
    }
}

impl From<&DecayFit> for FitLine {
    fn from(f: &DecayFit) -> Self {
        Self { intercept: f.intercept, slope: f.slope, log_power: f.log_power }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<FitLine>,
}

impl PlotSeries {
    pub fn from_fit(label: &str, fit: &DecayFit) -> Self {
        Self {
            label: label.into(),
            points: fit.abscissae.iter().cloned().zip(fit.values.iter().cloned()).collect(),
            fit: Some(fit.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<PlotSeries>,
}

const W: f64 = 720.0;
const H: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn log_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let pad = ((hi - lo) * 0.05).max(0.05);
    Some((lo - pad, hi + pad))
}

fn decades(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ceil() as i32, hi.floor() as i32);
    if b >= a {
        (a..=b).map(f64::from).collect()
    } else {
        vec![0.5 * (lo + hi)]
    }
}

fn tick_label(e: f64) -> String {
    if e.fract() == 0.0 {
        format!("1e{}", e as i32)
    } else {
        format!("{:.3}", 10f64.powf(e))
    }
}

/// Renders the plot; series without positive finite points are skipped.
pub fn render_svg(plot: &Plot) -> String {
    let xs = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = plot.series.iter().flat_map(|s| {
        let fitted: Vec<f64> = match &s.fit {
            Some(f) => s.points.iter().map(|p| f.eval(p.0)).collect(),
            None => Vec::new(),
        };
        s.points.iter().map(|p| p.1).chain(fitted)
    });
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(&plot.title));
    let (Some((x0, x1)), Some((y0, y1))) = (log_range(xs), log_range(ys)) else {
        out.push_str("</svg>\n");
        return out;
    };
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;
    let _ = writeln!(out, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for e in decades(x0, x1) {
        let px = LEFT + (e - x0) / (x1 - x0) * pw;
        let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(e));
    }
    for e in decades(y0, y1) {
        let py = TOP + (y1 - e) / (y1 - y0) * ph;
        let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, py + 4.0, tick_label(e));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 18.0, escape(&plot.x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );
    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().cloned().filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.1.is_finite()).collect();
        for &(x, y) in &pts {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        if let (Some(f), Some(first), Some(last)) = (&s.fit, pts.first(), pts.last()) {
            let n = 48;
            let (la, lb) = (first.0.ln(), last.0.ln());
            let path: Vec<String> = (0..=n)
                .map(|k| {
                    let x = (la + (lb - la) * k as f64 / n as f64).exp();
                    format!("{:.2},{:.2}", sx(x), sy(f.eval(x)))
                })
                .collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        }
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 14.0;
        let _ = writeln!(out, r#"<circle cx="{lx}" cy="{}" r="3.5" fill="{color}"/>"#, ly - 4.0);
        let label = match &s.fit {
            Some(f) => format!("{} (slope {:.3})", s.label, f.slope),
            None => s.label.clone(),
        };
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 10.0, escape(&label));
    }
    out.push_str("</svg>\n");
    out
}
