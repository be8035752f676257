//! Minimal, dependency-free SVG rendering of aggregates: per-metric
//! heatmaps over the `(N, ε)` grid and log-log scatter plots with fitted
//! lines. Output is a deterministic function of the aggregate.

use std::fmt::Write as _;

use super::sweep::{Aggregate, CellStats, MetricSummary};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 90.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Viridis-like ramp for `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn metrics_to_plot(agg: &Aggregate) -> Vec<&MetricSummary> {
    agg.metrics.iter().filter(|m| !m.cells.is_empty()).collect()
}

/// One heatmap panel per metric: rows are `N`, columns are `ε`, colour is
/// log₁₀ of the cell mean; the best `ε` per `N` is outlined.
pub fn heatmap_svg(agg: &Aggregate) -> String {
    let metrics = metrics_to_plot(agg);
    let panels = metrics.len().max(1) as f64;
    let width = panels * (PANEL_W + MARGIN_L + MARGIN_R);
    let height = PANEL_H + MARGIN_T + MARGIN_B;
    let mut out = String::new();
    header(&mut out, width, height);
    let rows = agg.n_grid.len().max(1);
    let cols = agg.eps_grid.len().max(1);
    let cw = PANEL_W / cols as f64;
    let ch = PANEL_H / rows as f64;
    for (p, m) in metrics.iter().enumerate() {
        let x0 = p as f64 * (PANEL_W + MARGIN_L + MARGIN_R) + MARGIN_L;
        let y0 = MARGIN_T;
        let logs: Vec<f64> = m.cells.iter().filter(|c| c.mean > 0.0).map(|c| c.mean.log10()).collect();
        let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{} — {}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 15.0,
            escape(&agg.name),
            escape(&m.metric)
        );
        for c in &m.cells {
            let (Some(i), Some(j)) = (row_of(agg, c), col_of(agg, c)) else { continue };
            // Largest N at the top.
            let y = y0 + (rows - 1 - i) as f64 * ch;
            let x = x0 + j as f64 * cw;
            let fill = if c.mean > 0.0 { color((c.mean.log10() - lo) / span) } else { "#cccccc".to_string() };
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}"><title>N={} eps={:.3e} mean={:.4e}</title></rect>"#,
                c.n, c.eps, c.mean
            );
        }
        for b in &m.best {
            let (Some(i), Some(j)) = (row_of(agg, b), col_of(agg, b)) else { continue };
            let y = y0 + (rows - 1 - i) as f64 * ch;
            let x = x0 + j as f64 * cw;
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#ff0000" stroke-width="2"/>"##,
                x + 1.0,
                y + 1.0,
                cw - 2.0,
                ch - 2.0
            );
        }
        for (i, n) in agg.n_grid.iter().enumerate() {
            let y = y0 + (rows - 1 - i) as f64 * ch + ch / 2.0 + 4.0;
            let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{n}</text>"#, x0 - 5.0);
        }
        let stride = cols.div_ceil(8);
        for (j, e) in agg.eps_grid.iter().enumerate().step_by(stride) {
            let x = x0 + j as f64 * cw + cw / 2.0;
            let _ = writeln!(
                out,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
                y0 + PANEL_H + 15.0,
                e.log10()
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">log10 eps</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 35.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">N</text>"#,
            x0 - 55.0,
            y0 + PANEL_H / 2.0,
            x0 - 55.0,
            y0 + PANEL_H / 2.0
        );
        // Colour bar.
        let bx = x0 + PANEL_W + 15.0;
        for k in 0..50 {
            let t = 1.0 - k as f64 / 49.0;
            let _ = writeln!(
                out,
                r#"<rect x="{bx:.1}" y="{:.2}" width="15" height="{:.2}" fill="{}"/>"#,
                y0 + k as f64 * PANEL_H / 50.0,
                PANEL_H / 50.0 + 0.5,
                color(t)
            );
        }
        if lo.is_finite() {
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{hi:.2}</text>"#, bx + 20.0, y0 + 10.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{lo:.2}</text>"#, bx + 20.0, y0 + PANEL_H);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">log10</text>"#, bx + 20.0, y0 + PANEL_H / 2.0);
        }
    }
    out.push_str("</svg>\n");
    out
}

fn row_of(agg: &Aggregate, c: &CellStats) -> Option<usize> {
    agg.n_grid.iter().position(|&n| n == c.n)
}

fn col_of(agg: &Aggregate, c: &CellStats) -> Option<usize> {
    agg.eps_grid.iter().position(|&e| e == c.eps)
}

/// A log-log series: points with optional error bars and an optional
/// fitted line `log10 y = intercept + slope·log10 x`.
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub errs: Vec<f64>,
    pub fit: Option<(f64, f64)>,
}

/// Renders series on shared log-log axes.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let width = PANEL_W + MARGIN_L + MARGIN_R + 120.0;
    let height = PANEL_H + MARGIN_T + MARGIN_B;
    let mut out = String::new();
    header(&mut out, width, height);
    let pts = || series.iter().flat_map(|s| s.xs.iter().zip(&s.ys)).filter(|(x, y)| **x > 0.0 && **y > 0.0);
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts() {
        xlo = xlo.min(x.log10());
        xhi = xhi.max(x.log10());
        ylo = ylo.min(y.log10());
        yhi = yhi.max(y.log10());
    }
    if !xlo.is_finite() {
        (xlo, xhi, ylo, yhi) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let d = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
        (lo - d, hi + d)
    };
    let (xlo, xhi) = pad(xlo, xhi);
    let (ylo, yhi) = pad(ylo, yhi);
    let px = |lx: f64| MARGIN_L + (lx - xlo) / (xhi - xlo) * PANEL_W;
    let py = |ly: f64| MARGIN_T + (yhi - ly) / (yhi - ylo) * PANEL_H;
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="13">{}</text>"#,
        MARGIN_L + PANEL_W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#000000"/>"##
    );
    for k in 0..=4 {
        let lx = xlo + (xhi - xlo) * k as f64 / 4.0;
        let ly = ylo + (yhi - ylo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{lx:.2}</text>"#,
            px(lx),
            MARGIN_T + PANEL_H + 15.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ly:.2}</text>"#,
            MARGIN_L - 5.0,
            py(ly) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">log10 {}</text>"#,
        MARGIN_L + PANEL_W / 2.0,
        MARGIN_T + PANEL_H + 35.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">log10 {}</text>"#,
        MARGIN_T + PANEL_H / 2.0,
        MARGIN_T + PANEL_H / 2.0,
        escape(y_label)
    );
    for (si, s) in series.iter().enumerate() {
        let c = PALETTE[si % PALETTE.len()];
        for (k, (&x, &y)) in s.xs.iter().zip(&s.ys).enumerate() {
            if x <= 0.0 || y <= 0.0 {
                continue;
            }
            let (cx, cy) = (px(x.log10()), py(y.log10()));
            if let Some(&e) = s.errs.get(k) {
                if e > 0.0 {
                    let top = py((y + e).log10());
                    let bottom = if y > e { py((y - e).log10()) } else { MARGIN_T + PANEL_H };
                    let _ = writeln!(
                        out,
                        r#"<line x1="{cx:.2}" y1="{top:.2}" x2="{cx:.2}" y2="{bottom:.2}" stroke="{c}"/>"#
                    );
                }
            }
            let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="{c}"/>"#);
        }
        let mut label = s.label.clone();
        if let Some((slope, intercept)) = s.fit {
            let finite: Vec<f64> = s.xs.iter().filter(|x| **x > 0.0).map(|x| x.log10()).collect();
            let a = finite.iter().cloned().fold(f64::INFINITY, f64::min);
            let b = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if a.is_finite() {
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-dasharray="5,3"/>"#,
                    px(a),
                    py(intercept + slope * a),
                    px(b),
                    py(intercept + slope * b)
                );
            }
            let _ = write!(label, " (slope {slope:.3})");
        }
        let ly = MARGIN_T + 15.0 + 16.0 * si as f64;
        let lx = MARGIN_L + PANEL_W + 10.0;
        let _ = writeln!(out, r#"<circle cx="{lx:.1}" cy="{:.1}" r="3.5" fill="{c}"/>"#, ly - 4.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 8.0, escape(&label));
    }
    out.push_str("</svg>\n");
    out
}

/// Best-`ε` error against `N` for each error metric, with the fitted line.
pub fn best_svg(agg: &Aggregate) -> String {
    let series: Vec<Series> = agg
        .metrics
        .iter()
        .filter(|m| !m.best.is_empty())
        .map(|m| Series {
            label: m.metric.clone(),
            xs: m.best.iter().map(|b| b.n as f64).collect(),
            ys: m.best.iter().map(|b| b.mean).collect(),
            errs: m.best.iter().map(|b| b.stderr).collect(),
            fit: m.slope.as_ref().map(|f| (f.slope, f.intercept)),
        })
        .collect();
    loglog_svg(&format!("{}: error at the best eps", agg.name), "N", "error", &series)
}

/// Error against `ε` for each `N` of a pointwise curve, with the fitted
/// small-`ε` and large-`ε` branch lines.
pub fn curve_svg(agg: &Aggregate) -> String {
    let mut series = Vec::new();
    for c in &agg.curves {
        series.push(Series {
            label: format!("N={}", c.n),
            xs: c.eps.clone(),
            ys: c.mean.clone(),
            errs: c.stderr.clone(),
            fit: None,
        });
        let third = c.eps.len() / 3;
        for (name, fit, range) in [
            ("small-eps fit", &c.small_eps_slope, 0..third),
            ("large-eps fit", &c.large_eps_slope, c.eps.len() - third..c.eps.len()),
        ] {
            if let Some(f) = fit {
                series.push(Series {
                    label: name.to_string(),
                    xs: c.eps[range.clone()].to_vec(),
                    ys: c.mean[range].to_vec(),
                    errs: Vec::new(),
                    fit: Some((f.slope, f.intercept)),
                });
            }
        }
    }
    loglog_svg(&format!("{}: error against eps", agg.name), "eps", "error", &series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colour_ramp_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
    }

    #[test]
    fn loglog_plot_is_well_formed() {
        let s = Series {
            label: "a<b".into(),
            xs: vec![10.0, 100.0],
            ys: vec![1.0, 0.1],
            errs: vec![0.1, 0.01],
            fit: Some((-1.0, 1.0)),
        };
        let svg = loglog_svg("t", "x", "y", &[s]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b (slope -1.000)"));
        assert!(svg.contains("stroke-dasharray"));
    }
}
