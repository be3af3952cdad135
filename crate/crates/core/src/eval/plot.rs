//! Standalone SVG line charts on the unit square.

use std::fmt::Write;

use super::bootstrap::BootstrapBand;
use super::roc::RocCurve;
use super::threshold::RecallCurves;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 7] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#111111"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Shaded region between a lower and an upper curve sharing x values.
    pub band: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    /// Vertical markers: x position and caption.
    pub markers: Vec<(f64, String)>,
}

fn sx(x: f64) -> f64 {
    LEFT + x.clamp(0.0, 1.0) * (WIDTH - LEFT - RIGHT)
}

fn sy(y: f64) -> f64 {
    HEIGHT - BOTTOM - y.clamp(0.0, 1.0) * (HEIGHT - TOP - BOTTOM)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn path(points: &[(f64, f64)]) -> String {
    let mut d = String::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
    }
    d.trim_end().to_string()
}

impl Chart {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (sx(0.0) + sx(1.0)) / 2.0,
            escape(&self.title)
        );
        for i in 0..=5 {
            let v = i as f64 / 5.0;
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                sx(v),
                sy(0.0),
                sx(v),
                sy(1.0)
            );
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                sx(0.0),
                sy(v),
                sx(1.0),
                sy(v)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text>"#,
                sx(v),
                sy(0.0) + 18.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
                sx(0.0) - 6.0,
                sy(v) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            sx(0.0),
            sy(1.0),
            sx(1.0) - sx(0.0),
            sy(0.0) - sy(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (sx(0.0) + sx(1.0)) / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let cy = (sy(0.0) + sy(1.0)) / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="20" y="{cy:.1}" text-anchor="middle" transform="rotate(-90 20 {cy:.1})">{}</text>"#,
            escape(&self.y_label)
        );
        if let Some((xs, lower, upper)) = &self.band {
            let mut outline: Vec<(f64, f64)> = xs.iter().copied().zip(upper.iter().copied()).collect();
            outline.extend(xs.iter().copied().zip(lower.iter().copied()).rev());
            let _ = writeln!(
                s,
                r##"<path d="{} Z" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
                path(&outline)
            );
        }
        for (x, caption) in &self.markers {
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="2,3"/>"##,
                sx(*x),
                sy(0.0),
                sx(*x),
                sy(1.0)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
                sx(*x),
                sy(1.0) - 4.0,
                escape(caption)
            );
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if series.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                path(&series.points)
            );
            let ly = TOP + 16.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 14.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
                ly - 4.0,
                lx + 20.0,
                ly - 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#,
                lx + 26.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// ROC curves with the chance diagonal.
pub fn roc_svg(title: &str, curves: &[(String, &RocCurve)]) -> String {
    let mut series: Vec<Series> = curves
        .iter()
        .map(|(name, roc)| Series {
            name: format!("{name} ({:.3})", roc.auc),
            points: roc.points.clone(),
            dashed: false,
        })
        .collect();
    series.push(Series {
        name: "chance".into(),
        points: vec![(0.0, 0.0), (1.0, 1.0)],
        dashed: true,
    });
    Chart {
        title: title.into(),
        x_label: "False positive rate".into(),
        y_label: "True positive rate".into(),
        series,
        band: None,
        markers: Vec::new(),
    }
    .render()
}

/// Recall of both classes against T, marked at T = 0.5 and the chosen T.
pub fn recall_svg(title: &str, curves: &RecallCurves, chosen: f64) -> String {
    let line = |ys: &[f64]| curves.boundaries.iter().copied().zip(ys.iter().copied()).collect();
    Chart {
        title: title.into(),
        x_label: "Decision boundary T".into(),
        y_label: "Recall".into(),
        series: vec![
            Series {
                name: "diabetic".into(),
                points: line(&curves.diabetic),
                dashed: false,
            },
            Series {
                name: "non-diabetic".into(),
                points: line(&curves.non_diabetic),
                dashed: false,
            },
        ],
        band: None,
        markers: vec![(0.5, "T=0.50".into()), (chosen, format!("T={chosen:.2}"))],
    }
    .render()
}

pub fn band_svg(title: &str, band: &BootstrapBand) -> String {
    let line = |ys: &[f64]| band.fpr.iter().copied().zip(ys.iter().copied()).collect();
    Chart {
        title: title.into(),
        x_label: "False positive rate".into(),
        y_label: "True positive rate".into(),
        series: vec![
            Series {
                name: format!("mean ({:.3})", band.mean_auc),
                points: line(&band.mean_tpr),
                dashed: false,
            },
            Series {
                name: "chance".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0)],
                dashed: true,
            },
        ],
        band: Some((band.fpr.clone(), band.lower_tpr.clone(), band.upper_tpr.clone())),
        markers: Vec::new(),
    }
    .render()
}
