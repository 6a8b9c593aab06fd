use std::fmt::Write;

use super::{ChartDocument, ChartStyle};

/// Fixed two-decimal coordinate, never `-0.00`.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub(crate) fn score3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) struct Svg<'a> {
    out: String,
    style: &'a ChartStyle,
}

impl<'a> Svg<'a> {
    pub fn new(style: &'a ChartStyle, title: &str) -> Self {
        let (w, h) = (style.width_px, style.height_px);
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" \
             viewBox=\"0 0 {w} {h}\" font-family=\"{}\" font-size=\"{}pt\" fill=\"{}\">",
            escape(&style.font_family),
            num(style.font_size_pt),
            style.palette.text
        );
        let _ = writeln!(out, "<title>{}</title>", escape(title));
        let _ = writeln!(
            out,
            "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#FFFFFF\"/>"
        );
        Svg { out, style }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn line(&mut self, class: &str, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64, dashed: bool) {
        let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(
            self.out,
            "<line class=\"{class}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"{dash}/>",
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            num(width)
        );
    }

    pub fn circle(&mut self, class: &str, cx: f64, cy: f64, r: f64, fill: &str, data: Option<&str>) {
        let data = data
            .map(|d| format!(" data-coalition=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            self.out,
            "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"{data}/>",
            num(cx),
            num(cy),
            num(r)
        );
    }

    #[allow(clippy::too_many_arguments)]
    pub fn rect(&mut self, class: &str, x: f64, y: f64, w: f64, h: f64, fill: &str, data: Option<&str>) {
        let data = data
            .map(|d| format!(" data-feature=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            self.out,
            "<rect class=\"{class}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\" stroke=\"#FFFFFF\" stroke-width=\"1.00\"{data}/>",
            num(x),
            num(y),
            num(w),
            num(h)
        );
    }

    /// `anchor` is `start`, `middle` or `end`.
    pub fn text(&mut self, class: &str, x: f64, y: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.out,
            "<text class=\"{class}\" x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" dominant-baseline=\"middle\">{}</text>",
            num(x),
            num(y),
            escape(content)
        );
    }

    /// Horizontal `[0, 1]` score axis along the bottom of the plot.
    pub fn score_axis(&mut self, label: &str) {
        let plot = self.style.plot();
        let text = self.style.palette.text.clone();
        self.line("axis", plot.left, plot.bottom, plot.right, plot.bottom, &text, 1.0, false);
        for tick in 0..=4 {
            let v = f64::from(tick) * 0.25;
            let x = plot.score_x(v);
            self.line("tick", x, plot.bottom, x, plot.bottom + 5.0, &text, 1.0, false);
            self.text("tick-label", x, plot.bottom + 18.0, "middle", &format!("{v:.2}"));
        }
        self.text(
            "axis-label",
            (plot.left + plot.right) / 2.0,
            plot.bottom + 42.0,
            "middle",
            label,
        );
    }

    pub fn finish(mut self) -> ChartDocument {
        self.out.push_str("</svg>\n");
        ChartDocument {
            width_px: self.style.width_px,
            height_px: self.style.height_px,
            body: self.out,
        }
    }
}
