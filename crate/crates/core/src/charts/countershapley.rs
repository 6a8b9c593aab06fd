use super::svg::{score3, Svg};
use super::{ChartDocument, ChartStyle};
use crate::countershapley::CounterShapleyValues;
use crate::error::Result;
use crate::instance::{ExplanationCase, Instance};

fn value_label(instance: &Instance, i: usize) -> String {
    instance.get(i).map_or_else(|| "?".into(), |v| v.label())
}

/// One-decimal percentage label, e.g. `42.9%` or `-12.5%`.
pub fn percentage_label(pct: f64) -> String {
    let s = format!("{pct:.1}%");
    if s == "-0.0%" {
        "0.0%".into()
    } else {
        s
    }
}

/// Single stacked bar: each change is a segment whose width is proportional
/// to `|φ_i|`, labelled with its share `φ_i / Σφ`. Positive segments run right
/// of the zero anchor, largest first; negative ones run left of it.
pub fn render_countershapley_chart(
    phi: &CounterShapleyValues,
    case: &ExplanationCase,
    style: &ChartStyle,
) -> Result<ChartDocument> {
    let shares = phi.percentages()?;
    let plot = style.plot();
    let p = &style.palette;

    let mut positive: Vec<(usize, f64)> = phi.phi.iter().filter(|(_, &v)| v >= 0.0).map(|(&i, &v)| (i, v)).collect();
    let mut negative: Vec<(usize, f64)> = phi.phi.iter().filter(|(_, &v)| v < 0.0).map(|(&i, &v)| (i, v)).collect();
    positive.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    negative.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let magnitude: f64 = phi.phi.values().map(|v| v.abs()).sum();
    let scale = plot.width() / magnitude;
    let neg_total: f64 = negative.iter().map(|(_, v)| v.abs()).sum();
    let anchor = plot.left + neg_total * scale;

    let bar_h = 56.0;
    let bar_y = plot.top + plot.height() * 0.30;

    let mut svg = Svg::new(style, "CounterShapley chart");

    let header_y = plot.top;
    let third = plot.width() / 3.0;
    svg.text(
        "annotation factual-score",
        plot.left,
        header_y,
        "start",
        &format!("factual score {}", score3(case.factual_score)),
    );
    svg.text(
        "annotation counterfactual-score",
        plot.left + third,
        header_y,
        "start",
        &format!("counterfactual score {}", score3(case.counterfactual_score)),
    );
    svg.text(
        "annotation threshold-label",
        plot.left + 2.0 * third,
        header_y,
        "start",
        &format!("threshold {}", score3(case.threshold)),
    );

    let mut segments = Vec::with_capacity(phi.phi.len());
    let mut x = anchor;
    for &(i, v) in &positive {
        let w = v * scale;
        segments.push((i, v, x, w));
        x += w;
    }
    let mut x = anchor;
    for &(i, v) in &negative {
        let w = v.abs() * scale;
        x -= w;
        segments.push((i, v, x, w));
    }

    for (n, &(i, v, x, w)) in segments.iter().enumerate() {
        let (class, fill) = if v < 0.0 {
            ("bar negative", &p.negative)
        } else {
            ("bar", &p.accent)
        };
        svg.rect(class, x, bar_y, w, bar_h, fill, Some(&i.to_string()));
        let cx = x + w / 2.0;
        svg.text("pct", cx, bar_y + bar_h / 2.0, "middle", &percentage_label(shares[&i]));

        // alternate label depth so narrow neighbours stay legible
        let depth = if n % 2 == 0 { 0.0 } else { 40.0 };
        let name = case
            .feature_name(i)
            .map(str::to_owned)
            .unwrap_or_else(|| format!("x{i}"));
        svg.line("leader", cx, bar_y + bar_h, cx, bar_y + bar_h + 10.0 + depth, &p.text, 0.75, false);
        svg.text("feature-label", cx, bar_y + bar_h + 22.0 + depth, "middle", &name);
        svg.text(
            "change-label",
            cx,
            bar_y + bar_h + 38.0 + depth,
            "middle",
            &format!("{} \u{2192} {}", value_label(&case.factual, i), value_label(&case.counterfactual, i)),
        );
    }

    if !negative.is_empty() {
        svg.line("zero-anchor", anchor, bar_y - 10.0, anchor, bar_y + bar_h + 10.0, &p.text, 1.5, false);
    }

    Ok(svg.finish())
}
