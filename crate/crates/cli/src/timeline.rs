//! Timeline graphic: ground truth above prediction, one coloured rectangle
//! per run, optional third bar of risk categories.

use ergoseg::labels::run_length_encode;
use ergoseg::reba::RiskCategory;
use std::fmt::Write;

const BAR_HEIGHT: usize = 20;
const GAP: usize = 6;
const PIXEL_WIDTH: usize = 1000;

const PALETTE: [&str; 20] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
];

pub fn class_color(class: usize) -> &'static str {
    PALETTE[class % PALETTE.len()]
}

pub fn risk_color(risk: RiskCategory) -> &'static str {
    match risk {
        RiskCategory::Low => "#2e7d32",
        RiskCategory::Medium => "#ffbf00",
        RiskCategory::High => "#c62828",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub color: &'static str,
    pub title: String,
}

/// One rectangle per run of equal class ids, frames as x units.
pub fn bar(labels: &[usize], y: usize, color: impl Fn(usize) -> &'static str, title: impl Fn(usize) -> String) -> Vec<Rect> {
    let Ok(runs) = run_length_encode(labels) else { return Vec::new() };
    runs.intervals()
        .into_iter()
        .map(|(class, start, end)| Rect { x: start, y, width: end - start, color: color(class), title: title(class) })
        .collect()
}

pub struct Timeline {
    pub truth: Vec<Rect>,
    pub pred: Vec<Rect>,
    pub risk: Vec<Rect>,
    pub frames: usize,
}

impl Timeline {
    /// `risk` maps class ids to categories and colours the truth runs.
    pub fn new(truth: &[usize], pred: &[usize], names: &dyn Fn(usize) -> String, risk: Option<&[RiskCategory]>) -> Self {
        let row = |i: usize| i * (BAR_HEIGHT + GAP);
        let mut t = Timeline {
            truth: bar(truth, row(0), class_color, names),
            pred: bar(pred, row(1), class_color, names),
            risk: Vec::new(),
            frames: truth.len(),
        };
        if let Some(r) = risk {
            t.risk = bar(truth, row(2), |c| risk_color(r[c]), |c| r[c].as_str().to_string());
        }
        t
    }

    pub fn to_svg(&self) -> String {
        let rows = if self.risk.is_empty() { 2 } else { 3 };
        let height = rows * BAR_HEIGHT + (rows - 1) * GAP;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PIXEL_WIDTH}" height="{height}" viewBox="0 0 {} {height}" preserveAspectRatio="none">"#,
            self.frames.max(1)
        );
        for (name, rects) in [("truth", &self.truth), ("prediction", &self.pred), ("risk", &self.risk)] {
            if rects.is_empty() {
                continue;
            }
            let _ = writeln!(out, r#"<g id="{name}">"#);
            for r in rects {
                let _ = writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{}" height="{BAR_HEIGHT}" fill="{}"><title>{}</title></rect>"#,
                    r.x,
                    r.y,
                    r.width,
                    r.color,
                    escape(&r.title)
                );
            }
            out.push_str("</g>\n");
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
