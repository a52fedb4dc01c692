//! Self-contained SVG learning curves: one panel per metric, one line per
//! strategy, with the aggregated data embedded as a leading comment so the
//! plot can be regenerated or diffed without the CSV next to it.

use crate::experiment::{SummaryRow, METRIC_NAMES};

const PANEL_W: f64 = 430.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_B: f64 = 36.0;
const MARGIN_T: f64 = 28.0;
const GAP: f64 = 26.0;

const PALETTE: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
    "#17becf",
];

pub fn curves_svg(summary: &[SummaryRow]) -> String {
    let mut strategies: Vec<&str> = summary.iter().map(|r| r.strategy.as_str()).collect();
    strategies.sort_unstable();
    strategies.dedup();
    let max_cycle = summary.iter().map(|r| r.cycle).max().unwrap_or(0);

    let width = 2.0 * (PANEL_W + GAP) + GAP;
    let height = 2.0 * (PANEL_H + GAP) + GAP + 40.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str("<!-- data\nstrategy,cycle,metric,mean,std,seeds\n");
    let mut rows: Vec<&SummaryRow> = summary.iter().collect();
    rows.sort_by(|a, b| (&a.strategy, a.cycle, a.metric).cmp(&(&b.strategy, b.cycle, b.metric)));
    for row in rows {
        svg.push_str(&format!(
            "{},{},{},{:.6},{:.6},{}\n",
            row.strategy, row.cycle, row.metric, row.mean, row.std, row.seeds
        ));
    }
    svg.push_str("-->\n");
    svg.push_str(&format!(
        "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"
    ));

    // Legend across the top.
    let mut lx = GAP;
    for (i, strategy) in strategies.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&format!(
            "<rect x=\"{lx:.1}\" y=\"12\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
             <text x=\"{:.1}\" y=\"23\" font-size=\"13\">{strategy}</text>\n",
            lx + 16.0
        ));
        lx += 16.0 + 9.0 * strategy.len() as f64 + 22.0;
    }

    for (panel, metric) in METRIC_NAMES.iter().enumerate() {
        let px = GAP + (panel % 2) as f64 * (PANEL_W + GAP);
        let py = 40.0 + GAP + (panel / 2) as f64 * (PANEL_H + GAP);
        svg.push_str(&panel_svg(summary, &strategies, metric, max_cycle, px, py));
    }
    svg.push_str("</svg>\n");
    svg
}

fn panel_svg(
    summary: &[SummaryRow],
    strategies: &[&str],
    metric: &str,
    max_cycle: usize,
    px: f64,
    py: f64,
) -> String {
    let mut out = String::new();
    let plot_x0 = px + MARGIN_L;
    let plot_y0 = py + MARGIN_T;
    let plot_w = PANEL_W - MARGIN_L - 12.0;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;

    // Deterministic padded range snapped to a 0.05 grid.
    let values: Vec<f64> = summary
        .iter()
        .filter(|r| r.metric == metric)
        .map(|r| r.mean)
        .collect();
    let (y_min, y_max) = if values.is_empty() {
        (0.0, 1.0)
    } else {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = (((lo - 0.03) * 20.0).floor() / 20.0).max(0.0);
        let hi = (((hi + 0.03) * 20.0).ceil() / 20.0).min(1.0);
        if lo < hi { (lo, hi) } else { (0.0, 1.0) }
    };

    let x_of = |cycle: usize| -> f64 {
        if max_cycle == 0 {
            plot_x0 + plot_w / 2.0
        } else {
            plot_x0 + plot_w * cycle as f64 / max_cycle as f64
        }
    };
    let y_of = |v: f64| -> f64 { plot_y0 + plot_h * (1.0 - (v - y_min) / (y_max - y_min)) };

    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" font-weight=\"bold\">{metric}</text>\n",
        plot_x0,
        py + 16.0
    ));
    out.push_str(&format!(
        "<rect x=\"{plot_x0:.1}\" y=\"{plot_y0:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n"
    ));

    // Y ticks on the snapped 0.05 grid, at most ~8 labels.
    let steps = ((y_max - y_min) / 0.05).round() as usize;
    let label_every = (steps / 6).max(1);
    for s in 0..=steps {
        let v = y_min + s as f64 * 0.05;
        let y = y_of(v);
        out.push_str(&format!(
            "<line x1=\"{plot_x0:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#ddd\" stroke-width=\"0.5\"/>\n",
            plot_x0 + plot_w
        ));
        if s % label_every == 0 {
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>\n",
                plot_x0 - 6.0,
                y + 4.0
            ));
        }
    }
    for cycle in 0..=max_cycle {
        let x = x_of(cycle);
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{cycle}</text>\n",
            plot_y0 + plot_h + 16.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">cycle</text>\n",
        plot_x0 + plot_w / 2.0,
        plot_y0 + plot_h + 32.0
    ));

    for (i, strategy) in strategies.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points: Vec<(usize, f64)> = summary
            .iter()
            .filter(|r| r.metric == metric && r.strategy == *strategy)
            .map(|r| (r.cycle, r.mean))
            .collect();
        points.sort_by_key(|(c, _)| *c);
        if points.is_empty() {
            continue;
        }
        let path: Vec<String> = points
            .iter()
            .map(|(c, v)| format!("{:.1},{:.1}", x_of(*c), y_of(*v)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            path.join(" ")
        ));
        for (c, v) in &points {
            out.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.4\" fill=\"{color}\"/>\n",
                x_of(*c),
                y_of(*v)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for (s, base) in [("random", 0.5), ("stepal", 0.6)] {
            for cycle in 0..=2 {
                for metric in METRIC_NAMES {
                    rows.push(SummaryRow {
                        strategy: s.to_string(),
                        cycle,
                        metric,
                        mean: base + cycle as f64 * 0.05,
                        std: 0.01,
                        seeds: 3,
                    });
                }
            }
        }
        rows
    }

    #[test]
    fn svg_contains_panels_lines_and_embedded_data() {
        let svg = curves_svg(&rows());
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 8); // 2 strategies x 4 panels
        assert!(svg.contains("<!-- data"));
        assert!(svg.contains("random,0,accuracy,0.500000"));
        assert!(svg.contains("macro_jaccard"));
    }

    #[test]
    fn svg_is_deterministic() {
        assert_eq!(curves_svg(&rows()), curves_svg(&rows()));
    }
}
