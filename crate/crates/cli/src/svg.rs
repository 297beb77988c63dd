use std::fmt::Write as _;

use losstack::eval::CalibrationCurve;
use losstack::explain::BeeswarmPoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Minimal SVG canvas with a data-to-pixel mapping.
struct Canvas {
    body: String,
    width: f64,
    height: f64,
    left: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Canvas {
    fn new(width: f64, height: f64, left: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Canvas {
            body: String::new(),
            width,
            height,
            left,
            x_range,
            y_range,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.left + (x - lo) / (hi - lo) * (self.width - self.left - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.height - BOTTOM - (y - lo) / (hi - lo) * (self.height - TOP - BOTTOM)
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            escape(content)
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], style: &str) {
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" {style}/>"#,
            coords.join(" ")
        );
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.1}" fill="{fill}"/>"#
        );
    }

    fn axes(&mut self, x_label: &str, y_label: &str, x_ticks: &[f64], y_ticks: &[f64]) {
        let (x0, x1) = (self.px(self.x_range.0), self.px(self.x_range.1));
        let (y0, y1) = (self.py(self.y_range.0), self.py(self.y_range.1));
        let axis = r#"stroke="black" stroke-width="1""#;
        self.line(x0, y0, x1, y0, axis);
        self.line(x0, y0, x0, y1, axis);
        for &t in x_ticks {
            let x = self.px(t);
            self.line(x, y0, x, y0 + 5.0, axis);
            self.text(x, y0 + 20.0, "middle", 11, &format!("{t:.1}"));
        }
        for &t in y_ticks {
            let y = self.py(t);
            self.line(x0 - 5.0, y, x0, y, axis);
            self.text(x0 - 8.0, y + 4.0, "end", 11, &format!("{t:.1}"));
        }
        self.text((x0 + x1) / 2.0, self.height - 15.0, "middle", 13, x_label);
        let (cx, cy) = (18.0, (y0 + y1) / 2.0);
        let _ = writeln!(
            self.body,
            r#"<text x="{cx:.2}" y="{cy:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 {cx:.2} {cy:.2})">{}</text>"#,
            escape(y_label)
        );
    }

    fn finish(self, title: &str, timestamp: Option<&str>) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
            w = self.width,
            h = self.height
        );
        if let Some(ts) = timestamp {
            let _ = writeln!(out, "<metadata>generated {}</metadata>", escape(ts));
        }
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
            self.width / 2.0,
            escape(title)
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn unit_ticks() -> Vec<f64> {
    (0..=5).map(|k| k as f64 / 5.0).collect()
}

/// ROC curve from `(fpr, tpr, threshold)` points.
pub fn roc_svg(
    points: &[(f64, f64, f64)],
    auc: f64,
    title: &str,
    timestamp: Option<&str>,
) -> String {
    let mut c = Canvas::new(WIDTH, HEIGHT, LEFT, (0.0, 1.0), (0.0, 1.0));
    c.axes(
        "False positive rate",
        "True positive rate",
        &unit_ticks(),
        &unit_ticks(),
    );
    c.polyline(
        &[(0.0, 0.0), (1.0, 1.0)],
        r##"stroke="#999999" stroke-dasharray="4 4""##,
    );
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.1)).collect();
    c.polyline(&pts, r##"stroke="#1f77b4" stroke-width="2""##);
    let (x, y) = (c.px(0.6), c.py(0.1));
    c.text(x, y, "start", 13, &format!("AUC = {auc:.3}"));
    c.finish(title, timestamp)
}

/// Reliability diagram: observed fraction against mean predicted probability.
pub fn calibration_svg(curve: &CalibrationCurve, title: &str, timestamp: Option<&str>) -> String {
    let mut c = Canvas::new(WIDTH, HEIGHT, LEFT, (0.0, 1.0), (0.0, 1.0));
    c.axes(
        "Mean predicted probability",
        "Observed fraction",
        &unit_ticks(),
        &unit_ticks(),
    );
    c.polyline(
        &[(0.0, 0.0), (1.0, 1.0)],
        r##"stroke="#999999" stroke-dasharray="4 4""##,
    );
    let pts: Vec<(f64, f64)> = curve
        .bins
        .iter()
        .map(|b| (b.mean_predicted, b.observed_fraction))
        .collect();
    c.polyline(&pts, r##"stroke="#d62728" stroke-width="2""##);
    for &(x, y) in &pts {
        let (px, py) = (c.px(x), c.py(y));
        c.circle(px, py, 4.0, "#d62728");
    }
    c.finish(title, timestamp)
}

fn value_colour(v: f64) -> String {
    let v = if v.is_finite() {
        v.clamp(0.0, 1.0)
    } else {
        0.5
    };
    let (lo, hi) = ((0x1f, 0x77, 0xb4), (0xd6, 0x27, 0x28));
    let mix = |a: i32, b: i32| (f64::from(a) + (f64::from(b) - f64::from(a)) * v).round() as i32;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(lo.0, hi.0),
        mix(lo.1, hi.1),
        mix(lo.2, hi.2)
    )
}

/// SHAP summary plot: one row per feature (top `top` ranks), points spread
/// vertically where they pile up, coloured by normalized feature value.
pub fn beeswarm_svg(
    points: &[BeeswarmPoint],
    top: usize,
    title: &str,
    timestamp: Option<&str>,
) -> String {
    let shown: Vec<&BeeswarmPoint> = points.iter().filter(|p| p.rank <= top).collect();
    let rows = shown.iter().map(|p| p.rank).max().unwrap_or(1);
    let row_height = 28.0;
    let height = TOP + BOTTOM + row_height * rows as f64;
    let extent = shown
        .iter()
        .map(|p| p.shap.abs())
        .fold(0.0, f64::max)
        .max(1e-6)
        * 1.05;
    let left = 230.0;
    let mut c = Canvas::new(
        WIDTH + 120.0,
        height,
        left,
        (-extent, extent),
        (0.0, rows as f64),
    );
    let ticks: Vec<f64> = (-2..=2).map(|k| extent * k as f64 / 2.0).collect();
    let (x0, x1) = (c.px(-extent), c.px(extent));
    let (y0, y1) = (c.py(0.0), c.py(rows as f64));
    let axis = r#"stroke="black" stroke-width="1""#;
    c.line(x0, y0, x1, y0, axis);
    for &t in &ticks {
        let x = c.px(t);
        c.line(x, y0, x, y0 + 5.0, axis);
        c.text(x, y0 + 20.0, "middle", 11, &format!("{t:.3}"));
    }
    let zero = c.px(0.0);
    c.line(zero, y0, zero, y1, r##"stroke="#999999" stroke-width="1""##);
    let (w, h) = (c.width, c.height);
    c.text(
        (x0 + x1) / 2.0,
        h - 15.0,
        "middle",
        13,
        "SHAP value (impact on predicted probability)",
    );

    for rank in 1..=rows {
        let mut row: Vec<&&BeeswarmPoint> = shown.iter().filter(|p| p.rank == rank).collect();
        let Some(first) = row.first() else { continue };
        let centre = c.py(rows as f64 - rank as f64 + 0.5);
        c.text(left - 10.0, centre + 4.0, "end", 12, &first.feature);
        row.sort_by(|a, b| a.shap.total_cmp(&b.shap));
        // stack points that share a pixel bin, alternating above and below
        let mut bins: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
        for p in row {
            let x = c.px(p.shap);
            let k = bins.entry((x / 3.0).floor() as i64).or_insert(0);
            let step = (*k as f64 / 2.0).ceil() * if *k % 2 == 0 { 1.0 } else { -1.0 };
            *k += 1;
            let y = centre + (step * 2.5).clamp(-row_height / 2.0 + 3.0, row_height / 2.0 - 3.0);
            c.circle(x, y, 2.2, &value_colour(p.normalized_value));
        }
    }
    let lx = w - 90.0;
    c.text(lx, TOP, "start", 11, "feature value");
    c.circle(lx + 6.0, TOP + 14.0, 4.0, &value_colour(1.0));
    c.text(lx + 16.0, TOP + 18.0, "start", 11, "high");
    c.circle(lx + 6.0, TOP + 30.0, 4.0, &value_colour(0.0));
    c.text(lx + 16.0, TOP + 34.0, "start", 11, "low");
    c.finish(title, timestamp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roc_svg_is_well_formed() {
        let s = roc_svg(
            &[(0.0, 0.0, 1.0), (0.5, 0.8, 0.5), (1.0, 1.0, 0.0)],
            0.75,
            "ROC <test>",
            None,
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("ROC &lt;test&gt;"));
        assert!(s.contains("AUC = 0.750"));
        assert!(!s.contains("<metadata>"));
        assert!(roc_svg(&[], 0.5, "t", Some("unix 1"))
            .contains("<metadata>generated unix 1</metadata>"));
    }

    #[test]
    fn beeswarm_rows_follow_ranks() {
        let pts: Vec<BeeswarmPoint> = (0..6)
            .map(|i| BeeswarmPoint {
                rank: i % 2 + 1,
                feature: format!("f{}", i % 2),
                shap: i as f64 * 0.01,
                normalized_value: i as f64 / 5.0,
            })
            .collect();
        let s = beeswarm_svg(&pts, 1, "bees", None);
        assert!(s.contains(">f0<"));
        assert!(!s.contains(">f1<"));
        assert_eq!(value_colour(0.0), "#1f77b4");
        assert_eq!(value_colour(1.0), "#d62728");
    }
}
