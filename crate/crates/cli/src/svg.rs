use std::fmt::Write;

/// One polyline on a chart.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub width: f64,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: &str, width: f64) -> Self {
        Self {
            label: label.into(),
            points,
            color: color.into(),
            width,
            dashed: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed y range; computed from the data when `None`.
    pub y_range: Option<(f64, f64)>,
    /// Draws a horizontal reference line at y = 0.
    pub zero_line: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl Chart {
    pub fn render(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = bounds(all().map(|p| p.0));
        let (y0, y1) = self.y_range.unwrap_or_else(|| {
            let (lo, hi) = bounds(all().map(|p| p.1).chain(self.zero_line.then_some(0.0)));
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        });
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        )
        .unwrap();
        writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * f64::from(k) / 4.0;
            let fy = y0 + (y1 - y0) * f64::from(k) / 4.0;
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(fx),
                TOP + ph + 18.0,
                tick(fx)
            )
            .unwrap();
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        if self.zero_line && y0 < 0.0 && y1 > 0.0 {
            writeln!(
                out,
                r##"<line x1="{LEFT}" x2="{}" y1="{1:.2}" y2="{1:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
                LEFT + pw,
                sy(0.0)
            )
            .unwrap();
        }
        for (i, s) in self.series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="{}"{dash} points="{}"/>"#,
                s.color,
                s.width,
                pts.join(" ")
            )
            .unwrap();
            let ly = TOP + 10.0 + 18.0 * i as f64;
            writeln!(
                out,
                r#"<line x1="{0}" x2="{1}" y1="{ly}" y2="{ly}" stroke="{2}" stroke-width="{3}"{dash}/><text x="{4}" y="{5}">{6}</text>"#,
                W - RIGHT + 10.0,
                W - RIGHT + 34.0,
                s.color,
                s.width,
                W - RIGHT + 40.0,
                ly + 4.0,
                escape(&s.label)
            )
            .unwrap();
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Distinct colours for overlays.
pub fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 9] = [
        "#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    ];
    COLORS[i % COLORS.len()]
}
