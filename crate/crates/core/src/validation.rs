//! Counterfactual property checks: class flip, non-empty delta, irreducibility,
//! and negative-contribution flagging. Everything is read from an existing
//! coalition map, so validation never calls the model.

use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::countershapley::{CoalitionMap, CounterShapleyValues};
use crate::instance::{is_class_one, Delta, ExplanationCase};

/// Values below this count as negative contributions rather than rounding noise.
pub const NEGATIVE_TOLERANCE: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeContribution {
    pub feature_index: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub class_flip: bool,
    pub delta_nonempty: bool,
    pub irreducible: bool,
    /// Proper, non-empty subsets of the delta (as feature indices) that already flip the class.
    pub flipping_subsets: Vec<Vec<usize>>,
    /// Flipping subsets none of whose proper subsets flip.
    pub minimal_flipping_subsets: Vec<Vec<usize>>,
    pub negative_contributions: Vec<NegativeContribution>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.class_flip && self.delta_nonempty && self.irreducible
    }
}

/// Proper non-empty coalitions landing on the counterfactual's side of `threshold`,
/// ascending by bitmask.
pub fn find_flipping_subsets(map: &CoalitionMap, threshold: f64) -> Vec<Coalition> {
    let full = Coalition::full(map.k());
    let target = is_class_one(map.full(), threshold);
    map.iter()
        .filter(|(v, _)| !v.is_empty() && *v != full)
        .filter(|(_, s)| is_class_one(*s, threshold) == target)
        .map(|(v, _)| v)
        .collect()
}

/// Keeps the flipping coalitions that have no flipping proper subset.
pub fn minimal_subsets(k: usize, flipping: &[Coalition]) -> Vec<Coalition> {
    let size = 1usize << k;
    let mut flips = vec![false; size];
    for v in flipping {
        flips[v.bits() as usize] = true;
    }
    // below[v]: some proper subset of v flips
    let mut below = vec![false; size];
    for mask in 1..size {
        let v = Coalition::from_bits(mask as u64);
        below[mask] = v.positions().any(|j| {
            let sub = v.without(j).bits() as usize;
            flips[sub] || below[sub]
        });
    }
    flipping
        .iter()
        .copied()
        .filter(|v| !below[v.bits() as usize])
        .collect()
}

pub fn negative_contributions(phi: &CounterShapleyValues) -> Vec<NegativeContribution> {
    phi.phi
        .iter()
        .filter(|(_, &v)| v < NEGATIVE_TOLERANCE)
        .map(|(&feature_index, &phi)| NegativeContribution { feature_index, phi })
        .collect()
}

pub fn validate_counterfactual(
    case: &ExplanationCase,
    delta: &Delta,
    map: &CoalitionMap,
    phi: &CounterShapleyValues,
) -> ValidationReport {
    let flipping = find_flipping_subsets(map, case.threshold);
    let minimal = minimal_subsets(map.k(), &flipping);
    let to_indices = |v: &Coalition| delta.coalition_indices(*v);
    ValidationReport {
        class_flip: case.class_flip(),
        delta_nonempty: delta.k() > 0,
        irreducible: flipping.is_empty(),
        flipping_subsets: flipping.iter().map(to_indices).collect(),
        minimal_flipping_subsets: minimal.iter().map(to_indices).collect(),
        negative_contributions: negative_contributions(phi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::countershapley::{countershapley_all, CoalitionOptions};
    use crate::instance::{compute_delta, Instance, Orientation};
    use crate::models::{CountingModel, TableModel};
    use proptest::prelude::*;

    fn run(scores: Vec<f64>, k: usize) -> (ValidationReport, u64) {
        let x = Instance::from_numbers(&vec![0.0; k]).unwrap();
        let c = Instance::from_numbers(&vec![1.0; k]).unwrap();
        let (base, full) = (scores[0], *scores.last().unwrap());
        let table = TableModel::new(x.clone(), c.clone(), scores).unwrap();
        let delta = compute_delta(&x, &c, 0.0).unwrap();
        let case = ExplanationCase::new(x, c, 0.5, base, full).unwrap();
        let mut m = CountingModel::new(table);
        let (map, phi) = countershapley_all(&case, &delta, &mut m, &CoalitionOptions::default()).unwrap();
        let before = m.evaluations();
        let report = validate_counterfactual(&case, &delta, &map, &phi);
        (report, m.evaluations() - before)
    }

    #[test]
    fn worked_table_is_irreducible() {
        let (r, extra_calls) = run(vec![0.2, 0.3, 0.4, 0.9], 2);
        assert_eq!(extra_calls, 0);
        assert!(r.class_flip && r.irreducible && r.is_valid());
        assert!(r.flipping_subsets.is_empty());
        assert!(r.negative_contributions.is_empty());
    }

    #[test]
    fn single_flipping_singleton() {
        let (r, _) = run(vec![0.2, 0.3, 0.6, 0.9], 2);
        assert!(!r.irreducible);
        assert_eq!(r.flipping_subsets, vec![vec![1]]);
        assert_eq!(r.minimal_flipping_subsets, vec![vec![1]]);
    }

    #[test]
    fn both_singletons_flip() {
        let (r, _) = run(vec![0.2, 0.6, 0.7, 0.9], 2);
        assert_eq!(r.flipping_subsets, vec![vec![0], vec![1]]);
    }

    #[test]
    fn k1_never_reducible() {
        let (r, _) = run(vec![0.2, 0.9], 1);
        assert!(r.irreducible);
    }

    #[test]
    fn no_flip_reported() {
        let (r, _) = run(vec![0.6, 0.7, 0.8, 0.9], 2);
        assert!(!r.class_flip);
        assert!(!r.is_valid());
    }

    #[test]
    fn negative_contribution_flagged() {
        // change 0 hurts in every coalition
        let (r, _) = run(vec![0.3, 0.2, 0.8, 0.7], 2);
        assert_eq!(r.negative_contributions.len(), 1);
        assert_eq!(r.negative_contributions[0].feature_index, 0);
        assert!((r.negative_contributions[0].phi + 0.1).abs() < 1e-12);
    }

    #[test]
    fn toward_zero_flip_direction() {
        // counterfactual is class 0; {0} already drops below t
        let (r, _) = run(vec![0.9, 0.4, 0.7, 0.1], 2);
        assert!(r.class_flip);
        assert_eq!(r.flipping_subsets, vec![vec![0]]);
    }

    #[test]
    fn minimal_filters_supersets() {
        let flips: Vec<Coalition> = [0b001, 0b011, 0b110, 0b101, 0b010]
            .into_iter()
            .map(Coalition::from_bits)
            .collect();
        let minimal = minimal_subsets(3, &flips);
        assert_eq!(minimal, vec![Coalition::from_bits(0b001), Coalition::from_bits(0b010)]);
    }

    proptest! {
        #[test]
        fn lattice_invariants(k in 1usize..6, seed in prop::collection::vec(0.0f64..=1.0, 64)) {
            let scores: Vec<f64> = seed[..1 << k].to_vec();
            let map = CoalitionMap::new((0..k).collect(), Orientation::TowardOne, scores.clone()).unwrap();
            let flips = find_flipping_subsets(&map, 0.5);
            let full = Coalition::full(k);
            prop_assert!(flips.iter().all(|v| !v.is_empty() && *v != full));
            let target = scores[full.bits() as usize] >= 0.5;
            for v in &flips {
                prop_assert_eq!(scores[v.bits() as usize] >= 0.5, target);
            }
            let minimal = minimal_subsets(k, &flips);
            for v in &flips {
                let has_sub = flips.iter().any(|u| u.is_proper_subset_of(*v));
                prop_assert_eq!(minimal.contains(v), !has_sub);
            }
        }
    }
}
