//! Exact CounterShapley values.
//!
//! The players are the feature changes in the delta, the empty coalition is
//! the factual and the grand coalition is the counterfactual. All `2^K`
//! coalition scores are fetched once into a [`CoalitionMap`]; each value is
//! then a weighted sum of marginal contributions read from that map:
//!
//! ```text
//! φ_i = Σ_{V ⊆ δ∖{i}} |V|!(K−|V|−1)!/K! · (o(M(V ∪ {i})) − o(M(V)))
//! ```
//!
//! where `o` is the score orientation. [`permutation_oracle`] recomputes the
//! same quantity by averaging marginal gains over all `K!` orderings.

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::coalition::{Coalition, MAX_BITS};
use crate::error::{Error, Result};
use crate::instance::{apply_changes, orient, Delta, ExplanationCase, Orientation};
use crate::models::Model;

pub const DEFAULT_MAX_K: usize = 20;
/// The permutation oracle enumerates `K!` orderings; it stops at this size.
pub const ORACLE_MAX_K: usize = 8;
pub const DEFAULT_BATCH_SIZE: usize = 1 << 12;
const MAP_LOAD_MAX_K: usize = 30;

#[derive(Debug, Clone, Copy)]
pub struct CoalitionOptions {
    /// Largest delta accepted; raise it to override the default cap.
    pub max_k: usize,
    /// Instances per model batch.
    pub batch_size: usize,
}

impl Default for CoalitionOptions {
    fn default() -> Self {
        CoalitionOptions {
            max_k: DEFAULT_MAX_K,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

/// Raw model score of every coalition of the delta, indexed by bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoalitionMapRepr", into = "CoalitionMapRepr")]
pub struct CoalitionMap {
    indices: Vec<usize>,
    orientation: Orientation,
    scores: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoalitionMapRepr {
    indices: Vec<usize>,
    orientation: Orientation,
    scores: BTreeMap<String, f64>,
}

impl TryFrom<CoalitionMapRepr> for CoalitionMap {
    type Error = Error;

    fn try_from(r: CoalitionMapRepr) -> Result<Self> {
        let k = r.indices.len();
        if k == 0 || k > MAP_LOAD_MAX_K {
            return Err(Error::Parse(format!("coalition map with K = {k} is not loadable")));
        }
        if r.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("coalition map indices must be strictly increasing".into()));
        }
        let mut scores = vec![None; 1 << k];
        for (key, s) in &r.scores {
            scores[Coalition::parse_binary(key, k)?.bits() as usize] = Some(*s);
        }
        let scores = scores
            .into_iter()
            .enumerate()
            .map(|(mask, s)| {
                s.ok_or_else(|| {
                    Error::Parse(format!(
                        "coalition map is missing {}",
                        Coalition::from_bits(mask as u64).to_binary(k)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CoalitionMap::new(r.indices, r.orientation, scores)
    }
}

impl From<CoalitionMap> for CoalitionMapRepr {
    fn from(m: CoalitionMap) -> Self {
        let k = m.k();
        CoalitionMapRepr {
            scores: Coalition::all(k)
                .map(|c| (c.to_binary(k), m.scores[c.bits() as usize]))
                .collect(),
            indices: m.indices,
            orientation: m.orientation,
        }
    }
}

impl CoalitionMap {
    pub fn new(indices: Vec<usize>, orientation: Orientation, scores: Vec<f64>) -> Result<Self> {
        let k = indices.len();
        if k == 0 || k > MAX_BITS {
            return Err(Error::Parse(format!("coalition map needs 1..={MAX_BITS} changes, got {k}")));
        }
        if scores.len() != 1 << k {
            return Err(Error::Parse(format!(
                "coalition map for K = {k} needs {} scores, got {}",
                1u64 << k,
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Parse(format!(
                "coalition {} has score {} outside [0, 1]",
                Coalition::from_bits(bad as u64).to_binary(k),
                scores[bad]
            )));
        }
        Ok(CoalitionMap {
            indices,
            orientation,
            scores,
        })
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Raw score of a coalition.
    pub fn raw(&self, coalition: Coalition) -> f64 {
        self.scores[coalition.bits() as usize]
    }

    pub fn oriented(&self, coalition: Coalition) -> f64 {
        orient(self.raw(coalition), self.orientation)
    }

    /// Score of the factual (empty coalition).
    pub fn base(&self) -> f64 {
        self.scores[0]
    }

    /// Score of the counterfactual (every change applied).
    pub fn full(&self) -> f64 {
        self.raw(Coalition::full(self.k()))
    }

    pub fn position(&self, feature_index: usize) -> Option<usize> {
        self.indices.binary_search(&feature_index).ok()
    }

    /// `(coalition, raw score)` pairs in ascending mask order.
    pub fn iter(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.scores
            .iter()
            .enumerate()
            .map(|(mask, &s)| (Coalition::from_bits(mask as u64), s))
    }
}

/// Scores every coalition of `delta`, ascending by bitmask, in fixed-size batches.
pub fn build_coalition_map(
    case: &ExplanationCase,
    delta: &Delta,
    model: &mut dyn Model,
    options: &CoalitionOptions,
) -> Result<CoalitionMap> {
    let k = delta.k();
    let cap = options.max_k.min(MAX_BITS - 1);
    if k > cap {
        return Err(Error::DeltaTooLarge { k, cap });
    }
    let total = 1u64 << k;
    let batch_size = options.batch_size.max(1) as u64;
    let mut scores = Vec::with_capacity(total as usize);
    let mut start = 0u64;
    while start < total {
        let end = (start + batch_size).min(total);
        let batch = (start..end)
            .map(|mask| delta.apply(&case.factual, &case.counterfactual, Coalition::from_bits(mask)))
            .collect::<Result<Vec<_>>>()?;
        let got = model.score_batch(&batch)?;
        crate::models::check_scores(&got, batch.len())?;
        scores.extend(got);
        start = end;
    }
    CoalitionMap::new(delta.indices().to_vec(), case.orientation, scores)
}

/// `w(ℓ) = ℓ!(K−ℓ−1)!/K!` for `ℓ = 0..K`, built by successive ratios.
pub fn shapley_weights(k: usize) -> Vec<f64> {
    let mut weights = Vec::with_capacity(k);
    if k == 0 {
        return weights;
    }
    let mut w = 1.0 / k as f64;
    for l in 0..k {
        weights.push(w);
        if l + 1 < k {
            w *= (l + 1) as f64 / (k - l - 1) as f64;
        }
    }
    weights
}

/// CounterShapley value of the change at feature index `feature_index`.
pub fn countershapley_value(feature_index: usize, map: &CoalitionMap) -> Result<f64> {
    let j = map
        .position(feature_index)
        .ok_or(Error::IndexNotInDelta(feature_index))?;
    Ok(value_at(j, map, &shapley_weights(map.k())))
}

fn value_at(j: usize, map: &CoalitionMap, weights: &[f64]) -> f64 {
    let mut phi = 0.0;
    for (coalition, _) in map.iter() {
        if coalition.contains(j) {
            continue;
        }
        let marginal = map.oriented(coalition.with(j)) - map.oriented(coalition);
        phi += weights[coalition.len()] * marginal;
    }
    phi
}

/// Per-change importance values in oriented score units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterShapleyValues {
    pub phi: BTreeMap<usize, f64>,
    pub base_raw_score: f64,
    pub full_raw_score: f64,
    pub orientation: Orientation,
}

impl CounterShapleyValues {
    pub fn from_map(map: &CoalitionMap) -> Self {
        let weights = shapley_weights(map.k());
        CounterShapleyValues {
            phi: map
                .indices()
                .iter()
                .enumerate()
                .map(|(j, &i)| (i, value_at(j, map, &weights)))
                .collect(),
            base_raw_score: map.base(),
            full_raw_score: map.full(),
            orientation: map.orientation(),
        }
    }

    pub fn get(&self, feature_index: usize) -> Option<f64> {
        self.phi.get(&feature_index).copied()
    }

    pub fn sum(&self) -> f64 {
        self.phi.values().sum()
    }

    /// `o(M(c)) − o(M(x))`, which the values add up to.
    pub fn total_worth(&self) -> f64 {
        orient(self.full_raw_score, self.orientation) - orient(self.base_raw_score, self.orientation)
    }

    /// `φ_i / Σφ · 100` per change.
    pub fn percentages(&self) -> Result<BTreeMap<usize, f64>> {
        let total = self.sum();
        if total.abs() < 1e-12 {
            return Err(Error::DegenerateSum);
        }
        Ok(self.phi.iter().map(|(&i, &v)| (i, v / total * 100.0)).collect())
    }

    /// Largest per-feature absolute difference to `other`; infinite if the key sets differ.
    pub fn max_abs_deviation(&self, other: &CounterShapleyValues) -> f64 {
        if self.phi.len() != other.phi.len() {
            return f64::INFINITY;
        }
        self.phi
            .iter()
            .map(|(i, a)| other.get(*i).map_or(f64::INFINITY, |b| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Builds the coalition map and evaluates every change: exactly `2^K` model calls.
pub fn countershapley_all(
    case: &ExplanationCase,
    delta: &Delta,
    model: &mut dyn Model,
    options: &CoalitionOptions,
) -> Result<(CoalitionMap, CounterShapleyValues)> {
    let map = build_coalition_map(case, delta, model, options)?;
    let values = CounterShapleyValues::from_map(&map);
    Ok((map, values))
}

/// Averages each change's marginal oriented gain over every ordering of the delta.
///
/// Scores each visited set of changed features once, straight from the model.
pub fn permutation_oracle(
    case: &ExplanationCase,
    delta: &Delta,
    model: &mut dyn Model,
) -> Result<CounterShapleyValues> {
    let k = delta.k();
    if k > ORACLE_MAX_K {
        return Err(Error::DeltaTooLarge { k, cap: ORACLE_MAX_K });
    }
    let orientation = case.orientation;
    let mut memo: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut score_of = |changed: &[usize]| -> Result<f64> {
        let mut key = changed.to_vec();
        key.sort_unstable();
        if let Some(&s) = memo.get(&key) {
            return Ok(s);
        }
        let instance = apply_changes(&case.factual, &case.counterfactual, &key)?;
        let s = model.score(&instance)?;
        crate::models::check_scores(&[s], 1)?;
        memo.insert(key, s);
        Ok(s)
    };

    let base = score_of(&[])?;
    let mut sums: BTreeMap<usize, f64> = delta.indices().iter().map(|&i| (i, 0.0)).collect();
    let mut orderings = 0u64;
    for order in delta.indices().iter().copied().permutations(k) {
        let mut prev = orient(base, orientation);
        for n in 0..k {
            let now = orient(score_of(&order[..=n])?, orientation);
            *sums.get_mut(&order[n]).expect("order is drawn from the delta") += now - prev;
            prev = now;
        }
        orderings += 1;
    }
    let full = score_of(delta.indices())?;
    let count = orderings as f64;
    Ok(CounterShapleyValues {
        phi: sums.into_iter().map(|(i, s)| (i, s / count)).collect(),
        base_raw_score: base,
        full_raw_score: full,
        orientation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{compute_delta, Instance};
    use crate::models::{CountingModel, TableModel};

    fn worked_table() -> (ExplanationCase, Delta, TableModel) {
        let x = Instance::from_numbers(&[0.0, 0.0]).unwrap();
        let c = Instance::from_numbers(&[1.0, 1.0]).unwrap();
        let table = TableModel::new(x.clone(), c.clone(), vec![0.2, 0.3, 0.4, 0.9]).unwrap();
        let delta = compute_delta(&x, &c, 0.0).unwrap();
        let case = ExplanationCase::new(x, c, 0.5, 0.2, 0.9).unwrap();
        (case, delta, table)
    }

    #[test]
    fn weights_match_factorials() {
        fn fact(n: usize) -> f64 {
            (1..=n).map(|v| v as f64).product()
        }
        for k in 1..=12 {
            let w = shapley_weights(k);
            for (l, wl) in w.iter().enumerate() {
                let exact = fact(l) * fact(k - l - 1) / fact(k);
                assert!((wl - exact).abs() <= 1e-15 * exact.max(1.0), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn weights_form_distribution_over_subsets() {
        // Σ_ℓ C(K−1, ℓ) w(ℓ) = 1
        for k in 1..=20usize {
            let w = shapley_weights(k);
            let mut binom = 1.0f64;
            let mut total = 0.0;
            for (l, wl) in w.iter().enumerate() {
                total += binom * wl;
                binom = binom * (k - 1 - l) as f64 / (l + 1) as f64;
            }
            assert!((total - 1.0).abs() < 1e-12, "k={k}: {total}");
        }
    }

    #[test]
    fn worked_k2_table() {
        let (case, delta, table) = worked_table();
        let mut model = CountingModel::new(table);
        let (map, values) =
            countershapley_all(&case, &delta, &mut model, &CoalitionOptions::default()).unwrap();
        assert_eq!(model.evaluations(), 4);
        assert_eq!(map.iter().map(|(_, s)| s).collect::<Vec<_>>(), vec![0.2, 0.3, 0.4, 0.9]);
        assert!((values.get(0).unwrap() - 0.3).abs() < 1e-15);
        assert!((values.get(1).unwrap() - 0.4).abs() < 1e-15);
        assert!((values.sum() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn single_change_is_whole_difference() {
        let x = Instance::from_numbers(&[0.0]).unwrap();
        let c = Instance::from_numbers(&[1.0]).unwrap();
        let mut t = CountingModel::new(TableModel::new(x.clone(), c.clone(), vec![0.2, 0.95]).unwrap());
        let delta = compute_delta(&x, &c, 0.0).unwrap();
        let case = ExplanationCase::new(x, c, 0.5, 0.2, 0.95).unwrap();
        let (map, v) = countershapley_all(&case, &delta, &mut t, &CoalitionOptions::default()).unwrap();
        assert_eq!(t.evaluations(), 2);
        assert_eq!(map.len(), 2);
        assert_eq!(v.get(0), Some(0.95 - 0.2));
    }

    #[test]
    fn dummy_change_gets_zero() {
        let x = Instance::from_numbers(&[0.0, 0.0, 0.0]).unwrap();
        let c = Instance::from_numbers(&[1.0, 1.0, 1.0]).unwrap();
        // bit 1 never matters
        let scores = [0.1, 0.3, 0.1, 0.3, 0.5, 0.8, 0.5, 0.8];
        let t = TableModel::new(x.clone(), c.clone(), scores.to_vec()).unwrap();
        let delta = compute_delta(&x, &c, 0.0).unwrap();
        let case = ExplanationCase::new(x, c, 0.5, 0.1, 0.8).unwrap();
        let mut t = t;
        let (_, v) = countershapley_all(&case, &delta, &mut t, &CoalitionOptions::default()).unwrap();
        assert_eq!(v.get(1), Some(0.0));
    }

    #[test]
    fn index_not_in_delta() {
        let (case, delta, mut table) = worked_table();
        let map = build_coalition_map(&case, &delta, &mut table, &CoalitionOptions::default()).unwrap();
        assert!(matches!(countershapley_value(5, &map), Err(Error::IndexNotInDelta(5))));
        assert!((countershapley_value(1, &map).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn cap_enforced_and_overridable() {
        let n = 5;
        let x = Instance::from_numbers(&vec![0.0; n]).unwrap();
        let c = Instance::from_numbers(&vec![1.0; n]).unwrap();
        let delta = compute_delta(&x, &c, 0.0).unwrap();
        let case = ExplanationCase::new(x, c, 0.5, 0.2, 0.9).unwrap();
        let mut m = crate::models::LinearModel::new(vec![0.1; n], 0.0, crate::models::Squash::Clip01);
        let tight = CoalitionOptions { max_k: 4, ..Default::default() };
        assert!(matches!(
            build_coalition_map(&case, &delta, &mut m, &tight),
            Err(Error::DeltaTooLarge { k: 5, cap: 4 })
        ));
        let chunked = CoalitionOptions { max_k: 5, batch_size: 3 };
        let mut counted = CountingModel::new(m);
        let map = build_coalition_map(&case, &delta, &mut counted, &chunked).unwrap();
        assert_eq!(map.len(), 32);
        assert_eq!(counted.evaluations(), 32);
        assert_eq!(counted.batches(), 11);
        // 2^(K-1) marginal terms per change
        assert_eq!(map.iter().filter(|(c, _)| !c.contains(0)).count(), 16);
    }

    #[test]
    fn oracle_matches_worked_table_and_caps() {
        let (case, delta, mut table) = worked_table();
        let v = permutation_oracle(&case, &delta, &mut table).unwrap();
        assert!((v.get(0).unwrap() - 0.3).abs() < 1e-15);
        assert!((v.get(1).unwrap() - 0.4).abs() < 1e-15);

        let x = Instance::from_numbers(&[0.0; 9]).unwrap();
        let c = Instance::from_numbers(&[1.0; 9]).unwrap();
        let delta = compute_delta(&x, &c, 0.0).unwrap();
        let case = ExplanationCase::new(x, c, 0.5, 0.2, 0.9).unwrap();
        let mut m = crate::models::LinearModel::new(vec![0.05; 9], 0.0, crate::models::Squash::Clip01);
        assert!(matches!(
            permutation_oracle(&case, &delta, &mut m),
            Err(Error::DeltaTooLarge { k: 9, cap: 8 })
        ));
    }

    #[test]
    fn map_serde_roundtrip_and_validation() {
        let (case, delta, mut table) = worked_table();
        let map = build_coalition_map(&case, &delta, &mut table, &CoalitionOptions::default()).unwrap();
        let json = serde_json::to_string(&map).unwrap();
        assert!(json.contains(r#""01":0.3"#), "{json}");
        let back: CoalitionMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, map);
        let missing = r#"{"indices":[0,1],"orientation":"toward_one","scores":{"00":0.2,"11":0.9}}"#;
        assert!(serde_json::from_str::<CoalitionMap>(missing).is_err());
    }

    #[test]
    fn degenerate_percentages() {
        let v = CounterShapleyValues {
            phi: [(0, 0.2), (1, -0.2)].into_iter().collect(),
            base_raw_score: 0.4,
            full_raw_score: 0.4,
            orientation: Orientation::TowardOne,
        };
        assert!(matches!(v.percentages(), Err(Error::DegenerateSum)));
    }
}
