//! Greedy feature-change importance.
//!
//! Starting from the factual, each round applies the remaining change whose
//! single-step extension has the highest oriented score. The gain of that
//! round is the change's importance. After `K` rounds the factual has become
//! the counterfactual, so the gains add up to the total score difference.

use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::countershapley::CoalitionMap;
use crate::error::{Error, Result};
use crate::instance::{orient, Delta, ExplanationCase, FeatureValue, Orientation};
use crate::models::{check_scores, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub feature_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_name: Option<String>,
    pub from_value: FeatureValue,
    pub to_value: FeatureValue,
    pub raw_score_after: f64,
    /// Oriented score increment of this step; negative when the change hurts.
    pub gain: f64,
}

/// Raw score of one candidate extension evaluated during a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub feature_index: usize,
    pub raw_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    pub steps: Vec<GreedyStep>,
    pub factual_raw_score: f64,
    pub counterfactual_raw_score: f64,
    pub orientation: Orientation,
    /// Every candidate scored per round, ascending by feature index.
    #[serde(default)]
    pub rounds: Vec<Vec<Candidate>>,
}

impl GreedyResult {
    pub fn k(&self) -> usize {
        self.steps.len()
    }

    pub fn total_gain(&self) -> f64 {
        self.steps.iter().map(|s| s.gain).sum()
    }

    pub fn gain_of(&self, feature_index: usize) -> Option<f64> {
        self.steps
            .iter()
            .find(|s| s.feature_index == feature_index)
            .map(|s| s.gain)
    }

    /// Raw scores along the path: factual first, then after each step.
    pub fn trajectory(&self) -> Vec<f64> {
        std::iter::once(self.factual_raw_score)
            .chain(self.steps.iter().map(|s| s.raw_score_after))
            .collect()
    }
}

/// Runs the greedy method against the model: `1 + K(K+1)/2` evaluations.
pub fn greedy_cfi(case: &ExplanationCase, delta: &Delta, model: &mut dyn Model) -> Result<GreedyResult> {
    run(case, delta, &mut ScoreSource::Model(model))
}

/// Same as [`greedy_cfi`], but reads every score from an existing coalition map.
pub fn greedy_from_map(case: &ExplanationCase, delta: &Delta, map: &CoalitionMap) -> Result<GreedyResult> {
    if map.indices() != delta.indices() {
        return Err(Error::Parse("coalition map was built for a different delta".into()));
    }
    run(case, delta, &mut ScoreSource::Map(map))
}

enum ScoreSource<'a> {
    Model(&'a mut dyn Model),
    Map(&'a CoalitionMap),
}

impl ScoreSource<'_> {
    fn scores(&mut self, case: &ExplanationCase, delta: &Delta, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        match self {
            ScoreSource::Model(model) => {
                let batch = coalitions
                    .iter()
                    .map(|&v| delta.apply(&case.factual, &case.counterfactual, v))
                    .collect::<Result<Vec<_>>>()?;
                let scores = model.score_batch(&batch)?;
                check_scores(&scores, batch.len())?;
                Ok(scores)
            }
            ScoreSource::Map(map) => Ok(coalitions.iter().map(|&v| map.raw(v)).collect()),
        }
    }
}

fn run(case: &ExplanationCase, delta: &Delta, source: &mut ScoreSource<'_>) -> Result<GreedyResult> {
    let k = delta.k();
    let orientation = case.orientation;
    let mut applied = Coalition::EMPTY;
    let mut current_raw = source.scores(case, delta, &[applied])?[0];
    let factual_raw_score = current_raw;
    let mut steps = Vec::with_capacity(k);
    let mut rounds = Vec::with_capacity(k);

    for _ in 0..k {
        let remaining: Vec<usize> = (0..k).filter(|&j| !applied.contains(j)).collect();
        let extensions: Vec<Coalition> = remaining.iter().map(|&j| applied.with(j)).collect();
        let scores = source.scores(case, delta, &extensions)?;

        // strict `>` keeps the lowest index among equal maxima
        let mut best: Option<(usize, f64)> = None;
        let mut best_oriented = f64::NEG_INFINITY;
        for (&j, &raw) in remaining.iter().zip(&scores) {
            let o = orient(raw, orientation);
            if o > best_oriented || best.is_none() {
                best_oriented = o;
                best = Some((j, raw));
            }
        }
        let (j, best_raw) = best.expect("a round always has a candidate");

        let feature_index = delta.indices()[j];
        steps.push(GreedyStep {
            feature_index,
            feature_name: case.feature_name(feature_index).map(str::to_owned),
            from_value: delta.factual_values()[j].clone(),
            to_value: delta.counterfactual_values()[j].clone(),
            raw_score_after: best_raw,
            gain: best_oriented - orient(current_raw, orientation),
        });
        rounds.push(
            remaining
                .iter()
                .zip(&scores)
                .map(|(&j, &raw_score)| Candidate {
                    feature_index: delta.indices()[j],
                    raw_score,
                })
                .collect(),
        );
        applied = applied.with(j);
        current_raw = best_raw;
    }

    Ok(GreedyResult {
        steps,
        factual_raw_score,
        counterfactual_raw_score: current_raw,
        orientation,
        rounds,
    })
}
