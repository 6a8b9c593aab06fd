use super::svg::{score3, Svg};
use super::{ChartDocument, ChartStyle};
use crate::greedy::GreedyResult;

/// Greedy path chart: one row per state from the factual (bottom) up to the
/// counterfactual (top), each marker at its raw score.
pub fn render_greedy_chart(result: &GreedyResult, threshold: f64, style: &ChartStyle) -> ChartDocument {
    let plot = style.plot();
    let rows = result.k() + 1;
    let row_h = plot.height() / rows as f64;
    let row_y = |r: usize| plot.bottom - (r as f64 + 0.5) * row_h;
    let scores = result.trajectory();

    let mut svg = Svg::new(style, "Greedy chart");
    let p = &style.palette;

    for r in 0..rows {
        svg.line("grid", plot.left, row_y(r), plot.right, row_y(r), "#E6E6E6", 1.0, false);
    }
    svg.score_axis("prediction score");

    let tx = plot.score_x(threshold);
    svg.line("threshold", tx, plot.top, tx, plot.bottom, &p.threshold, 1.5, true);
    svg.text("threshold-label", tx, plot.top - 14.0, "middle", &format!("threshold {}", score3(threshold)));

    for r in 1..rows {
        svg.line(
            "segment",
            plot.score_x(scores[r - 1]),
            row_y(r - 1),
            plot.score_x(scores[r]),
            row_y(r),
            &p.accent,
            2.0,
            false,
        );
    }

    for (r, &score) in scores.iter().enumerate() {
        let fill = if r == 0 { &p.factual } else { &p.accent };
        svg.circle("marker", plot.score_x(score), row_y(r), 6.0, fill, None);
        let label = if r == 0 {
            "factual".to_owned()
        } else {
            let step = &result.steps[r - 1];
            let name = step
                .feature_name
                .clone()
                .unwrap_or_else(|| format!("x{}", step.feature_index));
            format!("{name}: {} \u{2192} {}", step.from_value.label(), step.to_value.label())
        };
        svg.text("row-label", plot.left - 12.0, row_y(r), "end", &label);
    }

    let (first, last) = (scores[0], scores[rows - 1]);
    svg.text("score factual-score", plot.score_x(first) + 10.0, row_y(0) - 14.0, "start", &score3(first));
    svg.text(
        "score final-score",
        plot.score_x(last) + 10.0,
        row_y(rows - 1) - 14.0,
        "start",
        &score3(last),
    );

    svg.finish()
}
