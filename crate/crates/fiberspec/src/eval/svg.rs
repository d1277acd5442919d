use std::fmt::Write as _;

use super::confusion::ConfusionMatrix;
use super::histogram::ReHistogram;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// White-to-blue fill for a normalized count.
fn heat_fill(v: f64) -> String {
    let mix = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(255.0, 31.0), mix(255.0, 78.0), mix(255.0, 156.0))
}

/// Static confusion-matrix heatmap; rows are true labels, columns are
/// predictions. Pure XML with all geometry written at fixed precision.
pub fn confusion_heatmap_svg(cm: &ConfusionMatrix, labels: &[String]) -> String {
    let n = cm.n_classes();
    let cell = 30.0f64;
    let left = 86.0f64;
    let top = 86.0f64;
    let pad = 12.0f64;
    let width = left + n as f64 * cell + pad;
    let height = top + n as f64 * cell + pad;
    let max = cm.max_count().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\" font-size=\"10\">"
    );
    let _ = writeln!(s, "  <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>");
    for (t, label) in labels.iter().enumerate().take(n) {
        let y = top + t as f64 * cell + cell / 2.0 + 3.0;
        let _ = writeln!(
            s,
            "  <text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            xml_escape(label)
        );
        let x = left + t as f64 * cell + cell / 2.0;
        let _ = writeln!(
            s,
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"start\" transform=\"rotate(-60 {x:.1} {:.1})\">{}</text>",
            top - 6.0,
            top - 6.0,
            xml_escape(label)
        );
    }
    for t in 0..n {
        for p in 0..n {
            let count = cm.count(t, p);
            let v = count as f64 / max;
            let x = left + p as f64 * cell;
            let y = top + t as f64 * cell;
            let _ = writeln!(
                s,
                "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"{}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>",
                heat_fill(v)
            );
            let text_fill = if v > 0.5 { "white" } else { "#333" };
            let _ = writeln!(
                s,
                "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"{text_fill}\">{count}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 3.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

/// Grouped-bar rendering of the RE histogram with an optional vertical
/// threshold marker.
pub fn histogram_svg(h: &ReHistogram) -> String {
    let width = 640.0f64;
    let height = 360.0f64;
    let (l, r, t, b) = (56.0f64, 14.0f64, 16.0f64, 46.0f64);
    let plot_w = width - l - r;
    let plot_h = height - t - b;
    let n_groups = h.groups.len().max(1);
    let max_count = h
        .groups
        .iter()
        .flat_map(|(_, c)| c.iter())
        .copied()
        .max()
        .unwrap_or(0)
        .max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\" font-size=\"10\">"
    );
    let _ = writeln!(s, "  <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "  <line x1=\"{l:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>",
        height - b,
        width - r,
        height - b
    );
    let _ = writeln!(
        s,
        "  <line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>",
        height - b
    );

    let bin_px = plot_w / h.n_bins as f64;
    let bar_px = bin_px / n_groups as f64;
    for (g, (_, counts)) in h.groups.iter().enumerate() {
        let color = PALETTE[g % PALETTE.len()];
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let bar_h = plot_h * c as f64 / max_count;
            let x = l + i as f64 * bin_px + g as f64 * bar_px;
            let y = height - b - bar_h;
            let _ = writeln!(
                s,
                "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_px:.2}\" height=\"{bar_h:.2}\" fill=\"{color}\" fill-opacity=\"0.85\"/>"
            );
        }
    }

    for k in 0..=5 {
        let frac = k as f64 / 5.0;
        let x = l + frac * plot_w;
        let value = h.upper * frac;
        let _ = writeln!(
            s,
            "  <line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>",
            height - b,
            height - b + 4.0
        );
        let _ = writeln!(
            s,
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{value:.4}</text>",
            height - b + 16.0
        );
        let count_tick = (max_count * frac).round();
        let y = height - b - frac * plot_h;
        let _ = writeln!(
            s,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{count_tick:.0}</text>",
            l - 6.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">reconstruction error</text>",
        l + plot_w / 2.0,
        height - 8.0
    );

    if let Some(threshold) = h.threshold {
        let x = l + (threshold / h.upper).clamp(0.0, 1.0) * plot_w;
        let _ = writeln!(
            s,
            "  <line x1=\"{x:.2}\" y1=\"{t:.1}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"/>",
            height - b
        );
        let _ = writeln!(
            s,
            "  <text x=\"{:.2}\" y=\"{:.1}\" fill=\"#d62728\">threshold {threshold:.4}</text>",
            x + 4.0,
            t + 10.0
        );
    }

    for (g, (name, _)) in h.groups.iter().enumerate() {
        let color = PALETTE[g % PALETTE.len()];
        let y = t + 8.0 + g as f64 * 14.0;
        let _ = writeln!(
            s,
            "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            width - r - 110.0,
            y - 9.0
        );
        let _ = writeln!(
            s,
            "  <text x=\"{:.1}\" y=\"{y:.1}\">{}</text>",
            width - r - 96.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::confusion::confusion;
    use crate::eval::histogram::re_histogram;

    #[test]
    fn heatmap_is_static_xml_with_one_cell_per_pair() {
        let labels = vec!["A".into(), "B<1>".into(), "C".into()];
        let cm = confusion(&[0, 1, 2, 1], &[0, 1, 2, 2], 3).unwrap();
        let svg = confusion_heatmap_svg(&cm, &labels);
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.ends_with("</svg>\n"));
        assert!(!svg.contains("script"));
        assert!(svg.contains("B&lt;1&gt;"), "labels are escaped");
        let cells = svg.matches("<rect").count();
        assert_eq!(cells, 1 + 9, "background plus n^2 cells");
        // deterministic
        assert_eq!(svg, confusion_heatmap_svg(&cm, &labels));
    }

    #[test]
    fn histogram_svg_marks_threshold_and_legend() {
        let h = re_histogram(
            &[
                ("C1".into(), vec![0.01, 0.02, 0.03]),
                ("P1".into(), vec![0.4, 0.5]),
            ],
            Some(0.1),
            20,
        )
        .unwrap();
        let svg = histogram_svg(&h);
        assert!(svg.starts_with("<svg xmlns"));
        assert!(svg.contains("threshold 0.1000"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains(">C1<") && svg.contains(">P1<"));
        assert_eq!(svg, histogram_svg(&h));
    }

    #[test]
    fn histogram_svg_without_threshold_has_no_marker() {
        let h = re_histogram(&[("g".into(), vec![0.2, 0.3])], None, 10).unwrap();
        let svg = histogram_svg(&h);
        assert!(!svg.contains("threshold"));
    }
}
