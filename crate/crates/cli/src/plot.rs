//! Minimal deterministic SVG charts. Coordinates are printed with two decimals so
//! identical inputs give byte-identical files.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn draw(&self, s: &mut String, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        writeln!(
            s,
            r#"<path d="M{l:.2},{t:.2} L{l:.2},{b:.2} L{r:.2},{b:.2}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        for i in 0..=4 {
            let v = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let y = self.py(v);
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="black"/>"#,
                l - 4.0
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                l - 6.0,
                y + 4.0,
                tick(v)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            H - 15.0,
            escape(x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(y_label)
        )
        .unwrap();
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// One or more polylines over a shared x axis, with optional point markers.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, Vec<(f64, f64)>)],
    markers: &[(f64, f64)],
) -> String {
    let all = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().copied())
        .chain(markers.iter().copied());
    let pts: Vec<(f64, f64)> = all.collect();
    let (x0, x1) = range(pts.iter().map(|p| p.0));
    let (y0, y1) = range(pts.iter().map(|p| p.1));
    let ax = Axes { x0, x1, y0, y1 };
    let mut s = open(W, H, title);
    ax.draw(&mut s, x_label, y_label);
    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", ax.px(x), ax.py(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            d.join(" ")
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{colour}">{}</text>"#,
            W - RIGHT - 150.0,
            TOP + 14.0 * (i as f64 + 1.0),
            escape(name)
        )
        .unwrap();
    }
    for &(x, y) in markers {
        writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#d62728"/>"##,
            ax.px(x),
            ax.py(y)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Scree plot: bars of explained-variance ratio and the cumulative curve.
pub fn scree(ratios: &[f64]) -> String {
    let ax = Axes {
        x0: 0.5,
        x1: ratios.len() as f64 + 0.5,
        y0: 0.0,
        y1: 1.0,
    };
    let mut s = open(W, H, "Explained variance");
    ax.draw(&mut s, "component", "ratio");
    let bw = (ax.px(1.0) - ax.px(0.0)) * 0.6;
    let mut cum = 0.0;
    let mut line = Vec::new();
    for (i, &r) in ratios.iter().enumerate() {
        let x = ax.px(i as f64 + 1.0);
        writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="{}"/>"#,
            x - bw / 2.0,
            ax.py(r),
            ax.py(0.0) - ax.py(r),
            PALETTE[0]
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            H - BOTTOM + 16.0,
            i + 1
        )
        .unwrap();
        cum += r;
        line.push(format!("{x:.2},{:.2}", ax.py(cum.min(1.0))));
    }
    writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
        line.join(" "),
        PALETTE[1]
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn diverging(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Heatmap of `values[r][c]` on a blue-white-red scale over [-1, 1].
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>]) -> String {
    let cell = 44.0;
    let left = 130.0;
    let top = 60.0;
    let w = left + cell * col_labels.len() as f64 + 20.0;
    let h = top + cell * row_labels.len() as f64 + 20.0;
    let mut s = open(w.max(240.0), h, title);
    for (c, label) in col_labels.iter().enumerate() {
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + cell * (c as f64 + 0.5),
            top - 8.0,
            escape(label)
        )
        .unwrap();
    }
    for (r, label) in row_labels.iter().enumerate() {
        let y = top + cell * r as f64;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + cell / 2.0 + 4.0,
            escape(label)
        )
        .unwrap();
        for (c, &v) in values[r].iter().enumerate() {
            let x = left + cell * c as f64;
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}" stroke="white"/>"#,
                diverging(v)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                tick(v)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// One bar series per model across the metric groups, with optional CI whiskers.
pub struct BarSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub ci: Vec<Option<(f64, f64)>>,
}

pub fn grouped_bars(title: &str, groups: &[&str], series: &[BarSeries]) -> String {
    let ax = Axes {
        x0: 0.0,
        x1: groups.len() as f64,
        y0: 0.0,
        y1: 100.0,
    };
    let mut s = open(W, H, title);
    ax.draw(&mut s, "", "percent");
    let group_w = ax.px(1.0) - ax.px(0.0);
    let bw = group_w * 0.8 / series.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let gx = ax.px(g as f64);
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            gx + group_w / 2.0,
            H - BOTTOM + 16.0,
            escape(name)
        )
        .unwrap();
        for (i, sr) in series.iter().enumerate() {
            let v = sr.values[g].clamp(0.0, 100.0);
            let x = gx + group_w * 0.1 + bw * i as f64;
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="{}"/>"#,
                ax.py(v),
                ax.py(0.0) - ax.py(v),
                PALETTE[i % PALETTE.len()]
            )
            .unwrap();
            if let Some((lo, hi)) = sr.ci[g] {
                let cx = x + bw / 2.0;
                let (ylo, yhi) = (ax.py(lo.clamp(0.0, 100.0)), ax.py(hi.clamp(0.0, 100.0)));
                writeln!(s, r#"<path d="M{cx:.2},{ylo:.2} L{cx:.2},{yhi:.2} M{:.2},{ylo:.2} L{:.2},{ylo:.2} M{:.2},{yhi:.2} L{:.2},{yhi:.2}" stroke="black"/>"#, cx - 3.0, cx + 3.0, cx - 3.0, cx + 3.0).unwrap();
            }
        }
    }
    for (i, sr) in series.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{}"/>"#,
            W - RIGHT - 160.0,
            y - 9.0,
            PALETTE[i % PALETTE.len()]
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{y:.2}">{}</text>"#,
            W - RIGHT - 145.0,
            escape(&sr.name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_deterministic_and_closed() {
        let a = scree(&[0.6, 0.3, 0.1]);
        assert_eq!(a, scree(&[0.6, 0.3, 0.1]));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        let h = heatmap("x", &["a".into()], &["PC1".into()], &[vec![-0.5]]);
        assert!(h.contains("#8080ff"));
    }

    #[test]
    fn labels_are_escaped() {
        let s = line_chart("a<b", "t", "v", &[("s&t", vec![(0.0, 1.0), (1.0, 2.0)])], &[]);
        assert!(s.contains("a&lt;b") && s.contains("s&amp;t"));
    }
}
