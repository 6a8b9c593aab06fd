use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_model_file, Model};
use crate::error::{Error, Result};
use crate::instance::{FeatureValue, Instance};

/// A binary decision tree node. Routing goes left iff `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        leaf: f64,
    },
}

impl TreeNode {
    pub fn leaf(score: f64) -> Self {
        TreeNode::Leaf { leaf: score }
    }

    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TreeNode::Leaf { leaf } if (0.0..=1.0).contains(leaf) => Ok(()),
            TreeNode::Leaf { leaf } => Err(Error::Parse(format!("leaf score {leaf} outside [0, 1]"))),
            TreeNode::Split {
                threshold,
                left,
                right,
                ..
            } => {
                if !threshold.is_finite() {
                    return Err(Error::Parse("split threshold must be finite".into()));
                }
                left.validate()?;
                right.validate()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeModel {
    root: TreeNode,
}

impl TreeModel {
    pub fn new(root: TreeNode) -> Result<Self> {
        root.validate()?;
        Ok(TreeModel { root })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        TreeModel::new(serde_json::from_str(s)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&read_model_file(path)?)
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Minimum instance length this tree can route.
    pub fn min_arity(&self) -> usize {
        self.root.max_feature().map_or(0, |f| f + 1)
    }

    pub fn predict(&self, instance: &Instance) -> Result<f64> {
        if instance.len() < self.min_arity() {
            return Err(Error::ArityMismatch {
                expected: self.min_arity(),
                got: instance.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { leaf } => return Ok(*leaf),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let v = match &instance[*feature] {
                        FeatureValue::Number(v) => *v,
                        FeatureValue::Category(c) => {
                            return Err(Error::Unscorable(format!(
                                "tree splits on feature {feature}, which holds category `{c}`"
                            )))
                        }
                    };
                    node = if v <= *threshold { left } else { right };
                }
            }
        }
    }
}

impl Model for TreeModel {
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        instances.iter().map(|x| self.predict(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Depth-2 tree over features 1, 2 and 5 of a 6-feature instance.
    const DEPTH2: &str = r#"{
        "feature": 1, "threshold": 0.5,
        "left":  {"feature": 2, "threshold": 0.5, "left": {"leaf": 0.1}, "right": {"leaf": 0.4}},
        "right": {"feature": 5, "threshold": 0.5, "left": {"leaf": 0.6}, "right": {"leaf": 0.9}}
    }"#;

    fn inst(v: &[f64]) -> Instance {
        Instance::from_numbers(v).unwrap()
    }

    #[test]
    fn routes_left_left() {
        let mut t = TreeModel::from_json_str(DEPTH2).unwrap();
        assert_eq!(t.score(&inst(&[9.0, 0.0, 0.5, 9.0, 9.0, 9.0])).unwrap(), 0.1);
        assert_eq!(t.score(&inst(&[9.0, 1.0, 0.0, 9.0, 9.0, 1.0])).unwrap(), 0.9);
    }

    #[test]
    fn ignores_unused_features() {
        let t = TreeModel::from_json_str(DEPTH2).unwrap();
        let a = inst(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let b = inst(&[7.0, 1.0, 0.0, -3.0, 42.0, 0.0]);
        assert_eq!(t.predict(&a).unwrap(), t.predict(&b).unwrap());
    }

    #[test]
    fn validation_errors() {
        assert!(TreeModel::from_json_str(r#"{"leaf": 1.5}"#).is_err());
        assert!(TreeModel::from_json_str(r#"{"feature": 0}"#).is_err());
        let t = TreeModel::from_json_str(DEPTH2).unwrap();
        assert_eq!(t.min_arity(), 6);
        assert!(matches!(t.predict(&inst(&[0.0; 3])), Err(Error::ArityMismatch { .. })));
        let cat = Instance::new(vec![0.0.into(), "a".into()]).unwrap();
        let t2 = TreeModel::new(TreeNode::split(1, 0.0, TreeNode::leaf(0.0), TreeNode::leaf(1.0))).unwrap();
        assert!(matches!(t2.predict(&cat), Err(Error::Unscorable(_))));
    }
}
