//! SVG charts for counterfactual explanations.
//!
//! All three charts are plain string builders: the same inputs and style give
//! byte-identical documents. Elements carry a `class` attribute (`marker`,
//! `bar`, `dot-single`, `dot-combo`, ...) so their structure can be checked
//! without rendering.

mod constellation;
mod countershapley;
mod greedy;
mod svg;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use constellation::render_constellation_chart;
pub use countershapley::{percentage_label, render_countershapley_chart};
pub use greedy::render_greedy_chart;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartDocument {
    pub width_px: u32,
    pub height_px: u32,
    pub body: String,
}

impl ChartDocument {
    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.body.as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub accent: String,
    pub threshold: String,
    pub factual: String,
    pub text: String,
    /// Fill for negative contributions.
    pub negative: String,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            accent: "#E75480".into(),
            threshold: "#CC0000".into(),
            factual: "#E75480".into(),
            text: "#222222".into(),
            negative: "#1E88E5".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChartStyle {
    pub palette: Palette,
    pub font_family: String,
    pub font_size_pt: f64,
    /// Top, right, bottom, left, in pixels.
    pub margins: [f64; 4],
    pub width_px: u32,
    pub height_px: u32,
    /// Constellation charts above this many changes are refused.
    pub constellation_max_k: usize,
}

impl Default for ChartStyle {
    fn default() -> Self {
        ChartStyle {
            palette: Palette::default(),
            font_family: "sans-serif".into(),
            font_size_pt: 12.0,
            margins: [48.0, 48.0, 72.0, 280.0],
            width_px: 960,
            height_px: 540,
            constellation_max_k: 10,
        }
    }
}

impl ChartStyle {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let style: ChartStyle =
            serde_json::from_str(s).map_err(|e| Error::Style(e.to_string()))?;
        style.validate()?;
        Ok(style)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Style(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.palette;
        for (name, color) in [
            ("accent", &p.accent),
            ("threshold", &p.threshold),
            ("factual", &p.factual),
            ("text", &p.text),
            ("negative", &p.negative),
        ] {
            if !is_hex_color(color) {
                return Err(Error::Style(format!("palette.{name} `{color}` is not #RRGGBB")));
            }
        }
        if !(self.font_size_pt > 0.0 && self.font_size_pt.is_finite()) {
            return Err(Error::Style("font_size_pt must be positive".into()));
        }
        if self.font_family.trim().is_empty() {
            return Err(Error::Style("font_family is empty".into()));
        }
        if self.margins.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Style("margins must be non-negative".into()));
        }
        let [top, right, bottom, left] = self.margins;
        if left + right >= f64::from(self.width_px) || top + bottom >= f64::from(self.height_px) {
            return Err(Error::Style("margins leave no plotting area".into()));
        }
        Ok(())
    }

    pub(crate) fn plot(&self) -> PlotArea {
        let [top, right, bottom, left] = self.margins;
        PlotArea {
            left,
            right: f64::from(self.width_px) - right,
            top,
            bottom: f64::from(self.height_px) - bottom,
        }
    }
}

fn is_hex_color(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].bytes().all(|b| b.is_ascii_hexdigit())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PlotArea {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl PlotArea {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    /// x position of a raw score on a `[0, 1]` axis.
    pub fn score_x(&self, score: f64) -> f64 {
        self.left + score.clamp(0.0, 1.0) * self.width()
    }
}
