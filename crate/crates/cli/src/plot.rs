//! SVG rendering of an impact report.

use std::fmt::Write;

use chrono::NaiveDate;
use impact_bsts::impact::{Band, ImpactReport};
use impact_bsts::series::DateIndexedSeries;

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const GAP: f64 = 50.0;

struct Frame {
    top: f64,
    x0: f64,
    days: usize,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(top: f64, days: usize, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-9 * hi.abs().max(1.0));
        Self {
            top,
            x0: MARGIN_LEFT,
            days,
            y_min: lo - pad,
            y_max: hi + pad,
        }
    }

    fn x(&self, day: usize) -> f64 {
        let span = (self.days.max(2) - 1) as f64;
        self.x0 + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) * day as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        self.top + PANEL_HEIGHT * (self.y_max - v) / (self.y_max - self.y_min)
    }
}

fn polyline(out: &mut String, frame: &Frame, class: &str, points: impl Iterator<Item = (usize, f64)>) {
    let mut d = String::new();
    for (i, v) in points {
        let _ = write!(d, "{:.2},{:.2} ", frame.x(i), frame.y(v));
    }
    let _ = writeln!(out, r#"<polyline class="{class}" points="{}"/>"#, d.trim_end());
}

fn band(out: &mut String, frame: &Frame, offset: usize, bands: &[Band]) {
    let mut d = String::new();
    for (k, b) in bands.iter().enumerate() {
        let _ = write!(d, "{:.2},{:.2} ", frame.x(offset + k), frame.y(b.upper));
    }
    for (k, b) in bands.iter().enumerate().rev() {
        let _ = write!(d, "{:.2},{:.2} ", frame.x(offset + k), frame.y(b.lower));
    }
    let _ = writeln!(out, r#"<polygon class="band" points="{}"/>"#, d.trim_end());
}

fn axes(out: &mut String, frame: &Frame, title: &str, first: NaiveDate, intervention: usize) {
    let bottom = frame.top + PANEL_HEIGHT;
    let right = WIDTH - MARGIN_RIGHT;
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="{:.2}" y="{:.2}" width="{:.2}" height="{PANEL_HEIGHT}"/>"#,
        frame.x0,
        frame.top,
        right - frame.x0
    );
    let _ = writeln!(out, r#"<text class="title" x="{:.2}" y="{:.2}">{title}</text>"#, frame.x0, frame.top - 8.0);
    for v in [frame.y_min, 0.5 * (frame.y_min + frame.y_max), frame.y_max] {
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            frame.x0 - 6.0,
            frame.y(v) + 4.0,
            tick_label(v)
        );
    }
    for k in 0..5 {
        let day = k * (frame.days.max(1) - 1) / 4;
        let date = first + chrono::Duration::days(day as i64);
        let anchor = match k {
            0 => "start",
            4 => "end",
            _ => "middle",
        };
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="{anchor}">{date}</text>"#,
            frame.x(day),
            bottom + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<line class="intervention" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{bottom:.2}"/>"#,
        frame.top,
        x = frame.x(intervention)
    );
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e7 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.1}")
    }
}

/// Panel 1: actual series and counterfactual with its band. Last panel:
/// cumulative effect with its band. The point-wise panel sits between them
/// when requested.
pub fn render(pre: &DateIndexedSeries, report: &ImpactReport, pointwise_panel: bool) -> String {
    let n_pre = pre.len();
    let days = n_pre + report.days.len();
    let first = pre.start();
    let panels = if pointwise_panel { 3 } else { 2 };
    let height = MARGIN_TOP + panels as f64 * (PANEL_HEIGHT + GAP);
    let level = (100.0 * report.credible_level).round();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    out.push_str(
        "<style>text{font-family:sans-serif;font-size:11px}.title{font-size:13px}\
         .frame{fill:none;stroke:#999}.band{fill:#9ecae1;fill-opacity:0.5;stroke:none}\
         .actual{fill:none;stroke:#000;stroke-width:1.2}\
         .counterfactual,.effect{fill:none;stroke:#3182bd;stroke-width:1.5;stroke-dasharray:6 4}\
         .intervention{stroke:#888;stroke-dasharray:3 3}.zero{stroke:#555}</style>\n",
    );

    let pre_values: Vec<(usize, f64)> = pre
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    let post_actual = report.days.iter().enumerate().map(|(k, d)| (n_pre + k, d.actual));
    let cf: Vec<Band> = report.days.iter().map(|d| d.counterfactual).collect();
    let frame = Frame::new(
        MARGIN_TOP,
        days,
        pre_values
            .iter()
            .map(|p| p.1)
            .chain(post_actual.clone().map(|p| p.1))
            .chain(cf.iter().flat_map(|b| [b.lower, b.upper])),
    );
    out.push_str("<g id=\"panel-original\">\n");
    axes(&mut out, &frame, &format!("Actual and counterfactual ({level}% band)"), first, n_pre);
    band(&mut out, &frame, n_pre, &cf);
    polyline(&mut out, &frame, "actual", pre_values.iter().copied().chain(post_actual));
    polyline(&mut out, &frame, "counterfactual", cf.iter().enumerate().map(|(k, b)| (n_pre + k, b.mean)));
    out.push_str("</g>\n");

    let effect_panel = |out: &mut String, top: f64, id: &str, title: &str, bands: Vec<Band>| {
        let frame = Frame::new(top, days, bands.iter().flat_map(|b| [b.lower, b.upper]).chain([0.0]));
        let _ = writeln!(out, "<g id=\"{id}\">");
        axes(out, &frame, title, first, n_pre);
        let _ = writeln!(
            out,
            r#"<line class="zero" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            frame.x(0),
            frame.x(days - 1),
            y = frame.y(0.0)
        );
        band(out, &frame, n_pre, &bands);
        polyline(out, &frame, "effect", bands.iter().enumerate().map(|(k, b)| (n_pre + k, b.mean)));
        out.push_str("</g>\n");
    };
    let mut top = MARGIN_TOP + PANEL_HEIGHT + GAP;
    if pointwise_panel {
        let bands = report.days.iter().map(|d| d.pointwise).collect();
        effect_panel(&mut out, top, "panel-pointwise", "Point-wise effect", bands);
        top += PANEL_HEIGHT + GAP;
    }
    let bands = report.days.iter().map(|d| d.cumulative).collect();
    effect_panel(&mut out, top, "panel-cumulative", "Cumulative effect", bands);
    out.push_str("</svg>\n");
    out
}
