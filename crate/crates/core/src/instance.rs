//! Instances, deltas, score orientation and the explanation case container.
//!
//! A factual `x` and its counterfactual `c` are two [`Instance`]s of equal
//! length. The [`Delta`] between them is the set of feature indices whose
//! values differ; every importance method in this crate assigns one value per
//! delta index. Scores are class-1 probabilities, and [`Orientation`] maps them
//! so that "higher" always means "closer to the counterfactual class".

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};

/// A single feature value: numeric or categorical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RawValue")]
pub enum FeatureValue {
    Number(f64),
    Category(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawValue {
    Number(f64),
    Category(String),
}

impl TryFrom<RawValue> for FeatureValue {
    type Error = String;

    fn try_from(raw: RawValue) -> std::result::Result<Self, String> {
        match raw {
            RawValue::Number(v) => FeatureValue::number(v).map_err(|e| e.to_string()),
            RawValue::Category(s) => FeatureValue::category(s).map_err(|e| e.to_string()),
        }
    }
}

impl FeatureValue {
    pub fn number(v: f64) -> Result<Self> {
        if v.is_finite() {
            Ok(FeatureValue::Number(v))
        } else {
            Err(Error::InvalidInstance(format!("non-finite value {v}")))
        }
    }

    pub fn category(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        if s.is_empty() {
            Err(Error::InvalidInstance("empty category".into()))
        } else {
            Ok(FeatureValue::Category(s))
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            FeatureValue::Number(v) => Some(*v),
            FeatureValue::Category(_) => None,
        }
    }

    /// Whether two values count as different for delta membership.
    ///
    /// Numbers differ iff `|a - b| > epsilon`; categories differ iff the
    /// strings differ; a number never equals a category.
    pub fn differs(&self, other: &FeatureValue, epsilon: f64) -> bool {
        match (self, other) {
            (FeatureValue::Number(a), FeatureValue::Number(b)) => (a - b).abs() > epsilon,
            (FeatureValue::Category(a), FeatureValue::Category(b)) => a != b,
            _ => true,
        }
    }

    /// Label text: numbers with at most four significant digits, categories verbatim.
    pub fn label(&self) -> String {
        match self {
            FeatureValue::Number(v) => format_sig4(*v),
            FeatureValue::Category(s) => s.clone(),
        }
    }
}

impl From<f64> for FeatureValue {
    fn from(v: f64) -> Self {
        FeatureValue::Number(v)
    }
}

impl From<&str> for FeatureValue {
    fn from(s: &str) -> Self {
        FeatureValue::Category(s.to_owned())
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn format_sig4(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-3..5).contains(&mag) {
        let s = format!("{v:.3e}");
        // 1.500e4 -> 1.5e4
        return match s.split_once('e') {
            Some((m, e)) => format!("{}e{}", trim_zeros(m), e),
            None => s,
        };
    }
    let decimals = (3 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

/// An ordered feature vector, optionally with feature names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    values: Vec<FeatureValue>,
    feature_names: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InstanceRepr {
    Values(Vec<FeatureValue>),
    Named {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        feature_names: Option<Vec<String>>,
        values: Vec<FeatureValue>,
    },
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(repr: InstanceRepr) -> Result<Self> {
        match repr {
            InstanceRepr::Values(values) => Instance::new(values),
            InstanceRepr::Named {
                feature_names,
                values,
            } => match feature_names {
                Some(names) => Instance::with_names(values, names),
                None => Instance::new(values),
            },
        }
    }
}

impl From<Instance> for InstanceRepr {
    fn from(inst: Instance) -> Self {
        match inst.feature_names {
            Some(names) => InstanceRepr::Named {
                feature_names: Some(names),
                values: inst.values,
            },
            None => InstanceRepr::Values(inst.values),
        }
    }
}

impl Instance {
    pub fn new(values: Vec<FeatureValue>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInstance("instance has no features".into()));
        }
        Ok(Instance {
            values,
            feature_names: None,
        })
    }

    pub fn with_names(values: Vec<FeatureValue>, names: Vec<String>) -> Result<Self> {
        let mut inst = Instance::new(values)?;
        if names.len() != inst.values.len() {
            return Err(Error::InvalidInstance(format!(
                "{} feature names for {} values",
                names.len(),
                inst.values.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::InvalidInstance(format!("duplicate feature name `{dup}`")));
        }
        inst.feature_names = Some(names);
        Ok(inst)
    }

    /// Numeric-only convenience constructor.
    pub fn from_numbers(values: &[f64]) -> Result<Self> {
        let values = values
            .iter()
            .map(|&v| FeatureValue::number(v))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(values)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn values(&self) -> &[FeatureValue] {
        &self.values
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&FeatureValue> {
        self.values.get(index)
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.feature_names
            .as_ref()
            .and_then(|names| names.get(index))
            .map(String::as_str)
    }
}

impl std::ops::Index<usize> for Instance {
    type Output = FeatureValue;

    fn index(&self, index: usize) -> &FeatureValue {
        &self.values[index]
    }
}

/// The set of feature indices where factual and counterfactual differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeltaRepr", into = "DeltaRepr")]
pub struct Delta {
    indices: Vec<usize>,
    factual_values: Vec<FeatureValue>,
    counterfactual_values: Vec<FeatureValue>,
    feature_names: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct DeltaRepr {
    indices: Vec<usize>,
    factual_values: Vec<FeatureValue>,
    counterfactual_values: Vec<FeatureValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_names: Option<Vec<String>>,
}

impl TryFrom<DeltaRepr> for Delta {
    type Error = Error;

    fn try_from(r: DeltaRepr) -> Result<Self> {
        if r.indices.is_empty() {
            return Err(Error::EmptyDelta);
        }
        let k = r.indices.len();
        if r.factual_values.len() != k
            || r.counterfactual_values.len() != k
            || r.feature_names.as_ref().is_some_and(|n| n.len() != k)
        {
            return Err(Error::Parse("delta fields are not aligned".into()));
        }
        if r.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("delta indices must be strictly increasing".into()));
        }
        if r
            .factual_values
            .iter()
            .zip(&r.counterfactual_values)
            .any(|(a, b)| !a.differs(b, 0.0))
        {
            return Err(Error::Parse("delta lists an unchanged feature".into()));
        }
        Ok(Delta {
            indices: r.indices,
            factual_values: r.factual_values,
            counterfactual_values: r.counterfactual_values,
            feature_names: r.feature_names,
        })
    }
}

impl From<Delta> for DeltaRepr {
    fn from(d: Delta) -> Self {
        DeltaRepr {
            indices: d.indices,
            factual_values: d.factual_values,
            counterfactual_values: d.counterfactual_values,
            feature_names: d.feature_names,
        }
    }
}

impl Delta {
    /// Number of feature changes, `K`.
    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn factual_values(&self) -> &[FeatureValue] {
        &self.factual_values
    }

    pub fn counterfactual_values(&self) -> &[FeatureValue] {
        &self.counterfactual_values
    }

    /// Position of a feature index within the delta (its bit in a coalition mask).
    pub fn position(&self, feature_index: usize) -> Option<usize> {
        self.indices.binary_search(&feature_index).ok()
    }

    pub fn contains(&self, feature_index: usize) -> bool {
        self.position(feature_index).is_some()
    }

    /// Feature indices of the changes in `coalition`.
    pub fn coalition_indices(&self, coalition: Coalition) -> Vec<usize> {
        coalition.positions().map(|j| self.indices[j]).collect()
    }

    /// The factual with the changes in `coalition` applied.
    pub fn apply(&self, x: &Instance, c: &Instance, coalition: Coalition) -> Result<Instance> {
        apply_changes(x, c, &self.coalition_indices(coalition))
    }

    /// Display name of the `j`-th change: the feature name, or `x{index}`.
    pub fn name(&self, position: usize) -> String {
        self.feature_names
            .as_ref()
            .and_then(|n| n.get(position).cloned())
            .unwrap_or_else(|| format!("x{}", self.indices[position]))
    }

    /// `name: from → to` label of the `j`-th change.
    pub fn change_label(&self, position: usize) -> String {
        format!(
            "{}: {} \u{2192} {}",
            self.name(position),
            self.factual_values[position].label(),
            self.counterfactual_values[position].label()
        )
    }
}

/// Returns the indices where `x` and `c` differ.
pub fn compute_delta(x: &Instance, c: &Instance, epsilon: f64) -> Result<Delta> {
    if x.len() != c.len() {
        return Err(Error::LengthMismatch {
            factual: x.len(),
            counterfactual: c.len(),
        });
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidInstance(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let indices: Vec<usize> = (0..x.len())
        .filter(|&i| x[i].differs(&c[i], epsilon))
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptyDelta);
    }
    let names = x.feature_names().or(c.feature_names());
    Ok(Delta {
        factual_values: indices.iter().map(|&i| x[i].clone()).collect(),
        counterfactual_values: indices.iter().map(|&i| c[i].clone()).collect(),
        feature_names: names.map(|n| indices.iter().map(|&i| n[i].clone()).collect()),
        indices,
    })
}

/// Copy of `x` with `x[i]` replaced by `c[i]` for every `i` in `subset`.
pub fn apply_changes(x: &Instance, c: &Instance, subset: &[usize]) -> Result<Instance> {
    let len = x.len().min(c.len());
    let mut out = x.clone();
    for &i in subset {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        out.values[i] = c.values[i].clone();
    }
    Ok(out)
}

/// Which way the score must move to reach the counterfactual class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    TowardOne,
    TowardZero,
}

impl Orientation {
    pub fn from_scores(factual_score: f64, counterfactual_score: f64) -> Self {
        if counterfactual_score >= factual_score {
            Orientation::TowardOne
        } else {
            Orientation::TowardZero
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::TowardOne => "toward_one",
            Orientation::TowardZero => "toward_zero",
        }
    }
}

/// Maps a raw class-1 score so that larger means closer to the counterfactual class.
pub fn orient(score: f64, orientation: Orientation) -> f64 {
    match orientation {
        Orientation::TowardOne => score,
        Orientation::TowardZero => 1.0 - score,
    }
}

/// `s >= t` is class 1, `s < t` is class 0.
pub fn is_class_one(score: f64, threshold: f64) -> bool {
    score >= threshold
}

/// A factual/counterfactual pair with its threshold and raw model scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationCase {
    pub factual: Instance,
    pub counterfactual: Instance,
    pub threshold: f64,
    pub orientation: Orientation,
    pub factual_score: f64,
    pub counterfactual_score: f64,
}

impl ExplanationCase {
    pub fn new(
        factual: Instance,
        counterfactual: Instance,
        threshold: f64,
        factual_score: f64,
        counterfactual_score: f64,
    ) -> Result<Self> {
        if factual.len() != counterfactual.len() {
            return Err(Error::LengthMismatch {
                factual: factual.len(),
                counterfactual: counterfactual.len(),
            });
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidInstance(format!(
                "threshold must lie in (0, 1), got {threshold}"
            )));
        }
        for s in [factual_score, counterfactual_score] {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::ScoreOutOfRange { position: 0, score: s });
            }
        }
        Ok(ExplanationCase {
            orientation: Orientation::from_scores(factual_score, counterfactual_score),
            factual,
            counterfactual,
            threshold,
            factual_score,
            counterfactual_score,
        })
    }

    pub fn oriented(&self, score: f64) -> f64 {
        orient(score, self.orientation)
    }

    /// Factual and counterfactual land on opposite sides of the threshold.
    pub fn class_flip(&self) -> bool {
        is_class_one(self.factual_score, self.threshold)
            != is_class_one(self.counterfactual_score, self.threshold)
    }

    /// Feature name for `index`, if either instance carries names.
    pub fn feature_name(&self, index: usize) -> Option<&str> {
        self.factual
            .name(index)
            .or_else(|| self.counterfactual.name(index))
    }
}
