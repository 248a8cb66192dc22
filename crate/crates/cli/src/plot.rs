//! Band tables and minimal SVG line plots: one panel per coordinate with
//! the pointwise mean and the two band edges, plus optional member curves.

use std::fmt::Write as _;

use elastic_kmeans::metrics::PointwiseBand;
use elastic_kmeans::Func;

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 40.0;

/// Columns `t`, then `mean_d,lower_d,upper_d` for each coordinate `d`.
pub fn band_csv(band: &PointwiseBand) -> String {
    let mut out = String::from("t");
    for d in 0..band.dim {
        write!(out, ",mean_{d},lower_{d},upper_{d}").unwrap();
    }
    out.push('\n');
    for (j, t) in band.grid.points().iter().enumerate() {
        write!(out, "{t}").unwrap();
        for d in 0..band.dim {
            let i = j * band.dim + d;
            write!(out, ",{},{},{}", band.mean[i], band.lower[i], band.upper[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

struct Panel {
    x0: f64,
    lo: f64,
    hi: f64,
}

impl Panel {
    fn x(&self, t: f64) -> f64 {
        self.x0 + MARGIN + t * (PANEL_W - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let span = if self.hi > self.lo { self.hi - self.lo } else { 1.0 };
        PANEL_H - MARGIN - (v - self.lo) / span * (PANEL_H - 2.0 * MARGIN)
    }

    fn polyline(&self, out: &mut String, t: &[f64], v: impl Iterator<Item = f64>, style: &str) {
        out.push_str("<polyline fill=\"none\" ");
        out.push_str(style);
        out.push_str(" points=\"");
        for (x, y) in t.iter().zip(v) {
            write!(out, "{:.2},{:.2} ", self.x(*x), self.y(y)).unwrap();
        }
        out.push_str("\"/>\n");
    }
}

/// Plots `band`, drawing `members` underneath in grey.
pub fn band_svg(band: &PointwiseBand, members: &[&Func], title: &str) -> String {
    let t = band.grid.points();
    let width = PANEL_W * band.dim as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{PANEL_H}\" viewBox=\"0 0 {width} {PANEL_H}\">\n"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for d in 0..band.dim {
        let coord = |v: &[f64]| -> Vec<f64> { v.iter().skip(d).step_by(band.dim).copied().collect() };
        let (mean, lower, upper) = (coord(&band.mean), coord(&band.lower), coord(&band.upper));
        let mut all: Vec<f64> = lower.iter().chain(&upper).copied().collect();
        for f in members {
            all.extend(f.component(d));
        }
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let panel = Panel { x0: PANEL_W * d as f64, lo, hi };
        write!(
            out,
            "<rect x=\"{:.2}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
            panel.x0 + MARGIN,
            PANEL_W - 2.0 * MARGIN,
            PANEL_H - 2.0 * MARGIN
        )
        .unwrap();
        let label = if band.dim > 1 { format!("{} (coordinate {})", escape(title), d + 1) } else { escape(title) };
        write!(out, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">{label}</text>\n", panel.x0 + PANEL_W / 2.0, MARGIN - 12.0)
            .unwrap();
        write!(out, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{hi:.3}</text>\n", panel.x0 + MARGIN - 4.0, MARGIN + 4.0).unwrap();
        write!(out, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{lo:.3}</text>\n", panel.x0 + MARGIN - 4.0, PANEL_H - MARGIN).unwrap();
        for f in members {
            panel.polyline(&mut out, t, f.component(d).into_iter(), "stroke=\"#bbbbbb\" stroke-width=\"0.6\"");
        }
        panel.polyline(&mut out, t, lower.into_iter(), "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"");
        panel.polyline(&mut out, t, upper.into_iter(), "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"");
        panel.polyline(&mut out, t, mean.into_iter(), "stroke=\"#1f77b4\" stroke-width=\"2\"");
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
