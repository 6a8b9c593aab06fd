use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_scores, read_model_file, Model};
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::instance::{compute_delta, Delta, Instance};

/// Largest delta a table file may enumerate.
pub const TABLE_MAX_K: usize = 20;

/// An explicit gain function over the coalitions of one factual/counterfactual pair.
///
/// Only instances of the form `apply_changes(x, c, V)` can be scored; anything
/// else is [`Error::Unscorable`].
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    factual: Instance,
    counterfactual: Instance,
    delta: Delta,
    scores: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    factual: Instance,
    counterfactual: Instance,
    scores: BTreeMap<String, f64>,
}

impl TableModel {
    /// `scores[mask]` is the score of the coalition with that bitmask.
    pub fn new(factual: Instance, counterfactual: Instance, scores: Vec<f64>) -> Result<Self> {
        let delta = compute_delta(&factual, &counterfactual, 0.0)?;
        let k = delta.k();
        if k > TABLE_MAX_K {
            return Err(Error::DeltaTooLarge { k, cap: TABLE_MAX_K });
        }
        if scores.len() != 1 << k {
            return Err(Error::Parse(format!(
                "table needs {} scores for K = {k}, got {}",
                1u64 << k,
                scores.len()
            )));
        }
        check_scores(&scores, scores.len()).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(TableModel {
            factual,
            counterfactual,
            delta,
            scores,
        })
    }

    /// Builds the table by evaluating `f` on every coalition.
    pub fn from_fn(
        factual: Instance,
        counterfactual: Instance,
        f: impl FnMut(Coalition) -> f64,
    ) -> Result<Self> {
        let k = compute_delta(&factual, &counterfactual, 0.0)?.k();
        if k > TABLE_MAX_K {
            return Err(Error::DeltaTooLarge { k, cap: TABLE_MAX_K });
        }
        let scores = Coalition::all(k).map(f).collect();
        TableModel::new(factual, counterfactual, scores)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(s)?;
        let k = compute_delta(&file.factual, &file.counterfactual, 0.0)?.k();
        if k > TABLE_MAX_K {
            return Err(Error::DeltaTooLarge { k, cap: TABLE_MAX_K });
        }
        let mut scores = vec![None; 1 << k];
        for (key, score) in &file.scores {
            let c = Coalition::parse_binary(key, k)?;
            scores[c.bits() as usize] = Some(*score);
        }
        let scores = scores
            .into_iter()
            .enumerate()
            .map(|(mask, s)| {
                s.ok_or_else(|| {
                    Error::Parse(format!(
                        "table is missing coalition {}",
                        Coalition::from_bits(mask as u64).to_binary(k)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TableModel::new(file.factual, file.counterfactual, scores)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&read_model_file(path)?)
    }

    pub fn to_json(&self) -> String {
        let k = self.delta.k();
        let file = TableFile {
            factual: self.factual.clone(),
            counterfactual: self.counterfactual.clone(),
            scores: Coalition::all(k)
                .map(|c| (c.to_binary(k), self.scores[c.bits() as usize]))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("table serializes")
    }

    pub fn delta(&self) -> &Delta {
        &self.delta
    }

    pub fn factual(&self) -> &Instance {
        &self.factual
    }

    pub fn counterfactual(&self) -> &Instance {
        &self.counterfactual
    }

    pub fn coalition_score(&self, coalition: Coalition) -> f64 {
        self.scores[coalition.bits() as usize]
    }

    /// Recovers which coalition of changes `instance` carries.
    pub fn coalition_of(&self, instance: &Instance) -> Result<Coalition> {
        if instance.len() != self.factual.len() {
            return Err(Error::ArityMismatch {
                expected: self.factual.len(),
                got: instance.len(),
            });
        }
        let mut coalition = Coalition::EMPTY;
        for (i, value) in instance.values().iter().enumerate() {
            match self.delta.position(i) {
                Some(j) if *value == self.counterfactual[i] => coalition = coalition.with(j),
                Some(_) | None if *value == self.factual[i] => {}
                _ => {
                    return Err(Error::Unscorable(format!(
                        "feature {i} matches neither the factual nor the counterfactual of the table"
                    )))
                }
            }
        }
        Ok(coalition)
    }
}

impl Model for TableModel {
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        instances
            .iter()
            .map(|x| Ok(self.coalition_score(self.coalition_of(x)?)))
            .collect()
    }
}
