use super::svg::{score3, Svg};
use super::{ChartDocument, ChartStyle};
use crate::coalition::Coalition;
use crate::countershapley::{CoalitionMap, CounterShapleyValues};
use crate::error::{Error, Result};
use crate::instance::Delta;

/// Every non-empty coalition plotted at its raw score.
///
/// Single changes are large dots, one row each, ordered top to bottom by
/// descending φ. A combination is a small dot at the mean height of its
/// members' rows, linked to each member's large dot.
pub fn render_constellation_chart(
    map: &CoalitionMap,
    delta: &Delta,
    phi: &CounterShapleyValues,
    threshold: f64,
    style: &ChartStyle,
) -> Result<ChartDocument> {
    let k = map.k();
    if k > style.constellation_max_k {
        return Err(Error::DeltaTooLarge {
            k,
            cap: style.constellation_max_k,
        });
    }
    if map.indices() != delta.indices() {
        return Err(Error::Parse("coalition map was built for a different delta".into()));
    }

    let plot = style.plot();
    let p = &style.palette;

    let mut order: Vec<usize> = (0..k).collect();
    let phi_at = |j: usize| phi.get(delta.indices()[j]).unwrap_or(0.0);
    order.sort_by(|&a, &b| phi_at(b).total_cmp(&phi_at(a)).then(a.cmp(&b)));
    let row_h = plot.height() / k as f64;
    let mut row_y = vec![0.0; k];
    for (rank, &j) in order.iter().enumerate() {
        row_y[j] = plot.top + (rank as f64 + 0.5) * row_h;
    }
    let single_x = |j: usize| plot.score_x(map.raw(Coalition::singleton(j)));

    let mut svg = Svg::new(style, "Constellation chart");
    for &j in &order {
        svg.line("grid", plot.left, row_y[j], plot.right, row_y[j], "#EEEEEE", 1.0, false);
        svg.text("row-label", plot.left - 12.0, row_y[j], "end", &delta.change_label(j));
    }
    svg.score_axis("prediction score");

    let fx = plot.score_x(map.base());
    svg.line("factual-line", fx, plot.top, fx, plot.bottom, &p.factual, 1.5, true);
    svg.text(
        "annotation factual-score",
        fx,
        plot.top - 14.0,
        "middle",
        &format!("factual {}", score3(map.base())),
    );
    let tx = plot.score_x(threshold);
    svg.line("threshold", tx, plot.top, tx, plot.bottom, &p.threshold, 1.5, true);
    svg.text(
        "threshold-label",
        tx,
        plot.top - 28.0,
        "middle",
        &format!("threshold {}", score3(threshold)),
    );

    let combos: Vec<(Coalition, f64)> = map.iter().filter(|(v, _)| v.len() >= 2).collect();
    let combo_y = |v: Coalition| v.positions().map(|j| row_y[j]).sum::<f64>() / v.len() as f64;

    for &(v, score) in &combos {
        let (x, y) = (plot.score_x(score), combo_y(v));
        for j in v.positions() {
            svg.line("link", x, y, single_x(j), row_y[j], &p.accent, 0.6, false);
        }
    }
    for &(v, score) in &combos {
        svg.circle(
            "dot-combo",
            plot.score_x(score),
            combo_y(v),
            3.5,
            &p.accent,
            Some(&v.to_binary(k)),
        );
    }
    for (j, &y) in row_y.iter().enumerate() {
        let v = Coalition::singleton(j);
        svg.circle("dot-single", single_x(j), y, 7.0, &p.accent, Some(&v.to_binary(k)));
    }

    let full = Coalition::full(k);
    let y_full = if k == 1 { row_y[0] } else { combo_y(full) };
    svg.text(
        "annotation counterfactual-score",
        plot.score_x(map.full()) + 10.0,
        y_full - 14.0,
        "start",
        &format!("counterfactual {}", score3(map.full())),
    );

    Ok(svg.finish())
}
