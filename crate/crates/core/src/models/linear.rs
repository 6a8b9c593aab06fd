use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_model_file, Model};
use crate::error::{Error, Result};
use crate::instance::{FeatureValue, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Squash {
    /// `min(max(z, 0), 1)`
    Clip01,
    /// `1 / (1 + e^-z)`
    Logistic,
}

/// `squash(bias + Σ w_i·x_i)`; categorical features contribute a per-category weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub categorical_weights: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub bias: f64,
    pub squash: Squash,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64, squash: Squash) -> Self {
        LinearModel {
            weights,
            categorical_weights: BTreeMap::new(),
            bias,
            squash,
        }
    }

    pub fn with_category_weight(mut self, index: usize, category: &str, weight: f64) -> Self {
        self.categorical_weights
            .entry(index.to_string())
            .or_default()
            .insert(category.to_owned(), weight);
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let model: LinearModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&read_model_file(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Parse("linear model has no weights".into()));
        }
        let finite = self.weights.iter().all(|w| w.is_finite())
            && self.bias.is_finite()
            && self
                .categorical_weights
                .values()
                .flat_map(|m| m.values())
                .all(|w| w.is_finite());
        if !finite {
            return Err(Error::Parse("linear model weights must be finite".into()));
        }
        for key in self.categorical_weights.keys() {
            match key.parse::<usize>() {
                Ok(i) if i < self.weights.len() => {}
                _ => {
                    return Err(Error::Parse(format!(
                        "categorical weight key `{key}` is not a feature index"
                    )))
                }
            }
        }
        Ok(())
    }

    /// The pre-squash linear term.
    pub fn logit(&self, instance: &Instance) -> Result<f64> {
        if instance.len() != self.weights.len() {
            return Err(Error::ArityMismatch {
                expected: self.weights.len(),
                got: instance.len(),
            });
        }
        let mut z = self.bias;
        for (i, value) in instance.values().iter().enumerate() {
            z += match value {
                FeatureValue::Number(v) => self.weights[i] * v,
                FeatureValue::Category(cat) => self
                    .categorical_weights
                    .get(&i.to_string())
                    .and_then(|table| table.get(cat))
                    .copied()
                    .ok_or_else(|| {
                        Error::Unscorable(format!("no weight for category `{cat}` of feature {i}"))
                    })?,
            };
        }
        Ok(z)
    }

    pub fn predict(&self, instance: &Instance) -> Result<f64> {
        let z = self.logit(instance)?;
        Ok(match self.squash {
            Squash::Clip01 => z.clamp(0.0, 1.0),
            Squash::Logistic => 1.0 / (1.0 + (-z).exp()),
        })
    }
}

impl Model for LinearModel {
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        instances.iter().map(|x| self.predict(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(v: &[f64]) -> Instance {
        Instance::from_numbers(v).unwrap()
    }

    #[test]
    fn clip01_examples() {
        let mut m = LinearModel::from_json_str(r#"{"weights":[1.0,2.0],"bias":0.0,"squash":"clip01"}"#)
            .unwrap();
        assert!((m.score(&inst(&[0.1, 0.2])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(m.score_batch(&[inst(&[0.0, 0.0]), inst(&[1.0, 1.0])]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn logistic_is_strictly_monotone() {
        let m = LinearModel::new(vec![0.7, -1.3], 0.2, Squash::Logistic);
        let mut prev = 0.0;
        for step in 0..50 {
            let s = m.predict(&inst(&[step as f64 * 0.1 - 2.5, 0.3])).unwrap();
            assert!(s > prev && s < 1.0);
            prev = s;
        }
    }

    #[test]
    fn categorical_lookup() {
        let src = r#"{"weights":[0.1,0.0],"categorical_weights":{"1":{"M":0.0,"F":0.25}},"bias":0.0,"squash":"clip01"}"#;
        let m = LinearModel::from_json_str(src).unwrap();
        let f = Instance::new(vec![1.0.into(), "F".into()]).unwrap();
        assert!((m.predict(&f).unwrap() - 0.35).abs() < 1e-15);
        let unknown = Instance::new(vec![1.0.into(), "X".into()]).unwrap();
        assert!(matches!(m.predict(&unknown), Err(Error::Unscorable(_))));
    }

    #[test]
    fn arity_and_parse_errors() {
        let m = LinearModel::new(vec![1.0, 1.0], 0.0, Squash::Clip01);
        assert!(matches!(
            m.predict(&inst(&[1.0])),
            Err(Error::ArityMismatch { expected: 2, got: 1 })
        ));
        assert!(LinearModel::from_json_str(r#"{"weights":[],"squash":"clip01"}"#).is_err());
        assert!(LinearModel::from_json_str(r#"{"weights":[1],"squash":"tanh"}"#).is_err());
        assert!(LinearModel::from_json_str(
            r#"{"weights":[1],"categorical_weights":{"5":{"a":1}},"squash":"clip01"}"#
        )
        .is_err());
    }
}
