// SPDX-License-Identifier: Apache-2.0

//! Self-contained SVG plots: predicted vs true scatter with a y = x
//! reference line, and a sorted overlay of truth and prediction.

use std::fmt::Write as _;

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

struct Frame {
    lo_x: f64,
    hi_x: f64,
    lo_y: f64,
    hi_y: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (lo_x, hi_x) = span(&mut xs.clone());
        let (lo_y, hi_y) = span(&mut ys.clone());
        Frame { lo_x, hi_x, lo_y, hi_y }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.lo_x) / (self.hi_x - self.lo_x) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.lo_y) / (self.hi_y - self.lo_y) * (H - 2.0 * PAD)
    }
}

fn header(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

fn ticks(out: &mut String, f: &Frame) {
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}" text-anchor="start">{:.3}</text>"#, H - PAD + 14.0, f.lo_x);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, W - PAD, H - PAD + 14.0, f.hi_x);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 4.0, H - PAD, f.lo_y);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 4.0, PAD + 10.0, f.hi_y);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn scatter_svg(title: &str, y_true: &[f64], y_pred: &[f64]) -> String {
    let all = y_true.iter().chain(y_pred).copied();
    let f = Frame::new(all.clone(), all);
    let mut out = String::new();
    header(&mut out, title, "true FDR", "predicted FDR");
    ticks(&mut out, &f);
    let lo = f.lo_x.max(f.lo_y);
    let hi = f.hi_x.min(f.hi_y);
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        f.px(lo),
        f.py(lo),
        f.px(hi),
        f.py(hi)
    );
    for (t, p) in y_true.iter().zip(y_pred) {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue" fill-opacity="0.7"/>"#, f.px(*t), f.py(*p));
    }
    out.push_str("</svg>\n");
    out
}

/// Test samples ordered by true value; truth and prediction as two lines.
pub fn sorted_overlay_svg(title: &str, y_true: &[f64], y_pred: &[f64]) -> String {
    let mut order: Vec<usize> = (0..y_true.len()).collect();
    order.sort_by(|&a, &b| y_true[a].total_cmp(&y_true[b]).then(a.cmp(&b)));
    let n = order.len().max(2) as f64;
    let f = Frame::new([0.0, n - 1.0].into_iter(), y_true.iter().chain(y_pred).copied());
    let mut out = String::new();
    header(&mut out, title, "test sample (sorted by true FDR)", "FDR");
    ticks(&mut out, &f);
    for (series, color) in [(y_true, "black"), (y_pred, "crimson")] {
        let points: Vec<String> = order
            .iter()
            .enumerate()
            .map(|(k, &i)| format!("{:.2},{:.2}", f.px(k as f64), f.py(series[i])))
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, points.join(" "));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" fill="black">true</text>"#, PAD + 8.0, PAD + 16.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" fill="crimson">predicted</text>"#, PAD + 8.0, PAD + 30.0);
    out.push_str("</svg>\n");
    out
}
