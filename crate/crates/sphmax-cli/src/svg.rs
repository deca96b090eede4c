//! Minimal self-contained SVG log-log plot for scan reports.

use sphmax::experiments::ExperimentReport;

fn map(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi == lo {
        return 0.5 * (out_lo + out_hi);
    }
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

/// Render a log-log scatter of the scan points with the fitted line.
/// The output embeds no external assets.
pub fn plot_report(report: &ExperimentReport) -> String {
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let pts: Vec<(f64, f64)> = report
        .points
        .iter()
        .filter(|p| p.value > 0.0)
        .map(|p| (p.scale.ln(), p.value.ln()))
        .collect();
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"16\">{}</text>\n",
        ml, report.name
    ));
    if pts.is_empty() {
        svg.push_str(
            "<text x=\"200\" y=\"240\" font-family=\"monospace\">no positive data</text>\n</svg>\n",
        );
        return svg;
    }
    let x_lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let pad_y = 0.05 * (y_hi - y_lo).max(1e-12);
    let (y_lo, y_hi) = (y_lo - pad_y, y_hi + pad_y);
    let px = |x: f64| map(x, x_lo, x_hi, ml, w - mr);
    let py = |y: f64| map(y, y_lo, y_hi, h - mb, mt);

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    for p in &report.points {
        if p.value <= 0.0 {
            continue;
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            px(p.scale.ln()),
            h - mb + 16.0,
            p.scale
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\">R (log scale)</text>\n",
        0.5 * (ml + w - mr),
        h - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" \
         transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">value (log scale)</text>\n",
        0.5 * (mt + h - mb),
        0.5 * (mt + h - mb)
    ));

    // Fitted line.
    if let Some(fit) = &report.fit {
        let y1 = fit.intercept + fit.slope * x_lo;
        let y2 = fit.intercept + fit.slope * x_hi;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"steelblue\" \
             stroke-width=\"1.5\"/>\n",
            px(x_lo),
            py(y1),
            px(x_hi),
            py(y2)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">slope {:.3}, \
             r^2 {:.4}</text>\n",
            ml + 10.0,
            mt + 14.0,
            fit.slope,
            fit.r_squared
        ));
    }
    // Data points with +-3 se whiskers where meaningful.
    for p in &report.points {
        if p.value <= 0.0 {
            continue;
        }
        let cx = px(p.scale.ln());
        let cy = py(p.value.ln());
        let lo = p.value - 3.0 * p.std_error;
        if lo > 0.0 {
            let y_top = py((p.value + 3.0 * p.std_error).ln());
            let y_bot = py(lo.ln());
            svg.push_str(&format!(
                "<line x1=\"{cx:.1}\" y1=\"{y_top:.1}\" x2=\"{cx:.1}\" y2=\"{y_bot:.1}\" \
                 stroke=\"dimgray\" stroke-width=\"1\"/>\n"
            ));
        }
        svg.push_str(&format!(
            "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"3.5\" fill=\"firebrick\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
