use cfikit::countershapley::{permutation_oracle, CoalitionOptions};
use cfikit::models::{CountingModel, LinearModel, Model, Squash, TableModel};
use cfikit::validation::minimal_subsets;
use cfikit::{
    compute_delta, countershapley_all, find_flipping_subsets, greedy_cfi, greedy_from_map, validate_counterfactual,
    Coalition, ExplanationCase, Instance,
};
use proptest::prelude::*;

fn table(scores: Vec<f64>, threshold: f64) -> (ExplanationCase, cfikit::Delta, TableModel) {
    let k = scores.len().trailing_zeros() as usize;
    let x = Instance::from_numbers(&vec![0.0; k]).unwrap();
    let c = Instance::from_numbers(&vec![1.0; k]).unwrap();
    let case = ExplanationCase::new(x.clone(), c.clone(), threshold, scores[0], scores[scores.len() - 1]).unwrap();
    let model = TableModel::new(x.clone(), c.clone(), scores).unwrap();
    (case, compute_delta(&x, &c, 0.0).unwrap(), model)
}

fn scores_strategy() -> impl Strategy<Value = Vec<f64>> {
    (1usize..=6).prop_flat_map(|k| prop::collection::vec(0.0f64..=1.0, 1 << k))
}

proptest! {
    #[test]
    fn values_sum_to_the_oriented_score_gap(scores in scores_strategy()) {
        let (case, delta, mut model) = table(scores, 0.5);
        let (_, phi) = countershapley_all(&case, &delta, &mut model, &CoalitionOptions::default()).unwrap();
        let gap = case.oriented(case.counterfactual_score) - case.oriented(case.factual_score);
        prop_assert!((phi.sum() - gap).abs() <= 1e-9);
        let greedy = greedy_cfi(&case, &delta, &mut model).unwrap();
        prop_assert!((greedy.total_gain() - gap).abs() <= 1e-9);
    }

    #[test]
    fn lattice_sum_matches_permutations(scores in scores_strategy()) {
        let (case, delta, mut model) = table(scores, 0.5);
        let (_, phi) = countershapley_all(&case, &delta, &mut model, &CoalitionOptions::default()).unwrap();
        let oracle = permutation_oracle(&case, &delta, &mut model).unwrap();
        prop_assert!(phi.max_abs_deviation(&oracle) <= 1e-12);
    }

    #[test]
    fn greedy_from_map_replays_the_live_run(scores in scores_strategy()) {
        let (case, delta, mut model) = table(scores, 0.5);
        let (map, _) = countershapley_all(&case, &delta, &mut model, &CoalitionOptions::default()).unwrap();
        let live = greedy_cfi(&case, &delta, &mut model).unwrap();
        let replay = greedy_from_map(&case, &delta, &map).unwrap();
        prop_assert_eq!(live, replay);
    }

    #[test]
    fn greedy_visits_each_change_once(scores in scores_strategy()) {
        let (case, delta, model) = table(scores, 0.5);
        let mut counted = CountingModel::new(model);
        let greedy = greedy_cfi(&case, &delta, &mut counted).unwrap();
        let k = delta.k();
        let mut seen: Vec<usize> = greedy.steps.iter().map(|s| s.feature_index).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, delta.indices().to_vec());
        prop_assert_eq!(counted.evaluations(), 1 + (k * (k + 1) / 2) as u64);
        prop_assert_eq!(counted.batches(), k as u64 + 1);
    }

    #[test]
    fn flipping_subsets_are_proper_and_minimal_ones_an_antichain(
        scores in scores_strategy(),
        threshold in 0.05f64..0.95,
    ) {
        let (case, delta, mut model) = table(scores, threshold);
        let (map, phi) = countershapley_all(&case, &delta, &mut model, &CoalitionOptions::default()).unwrap();
        let k = delta.k();
        let flips = find_flipping_subsets(&map, threshold);
        let full_class = map.full() >= threshold;
        for v in &flips {
            prop_assert!(v.is_proper_subset_of(Coalition::full(k)) && !v.is_empty());
            prop_assert_eq!(map.raw(*v) >= threshold, full_class);
        }
        let minimal = minimal_subsets(k, &flips);
        for a in &minimal {
            prop_assert!(flips.contains(a));
            for b in &minimal {
                prop_assert!(a == b || !a.is_subset_of(*b));
            }
        }
        for v in &flips {
            prop_assert!(minimal.iter().any(|m| m.is_subset_of(*v)));
        }
        let report = validate_counterfactual(&case, &delta, &map, &phi);
        prop_assert_eq!(report.irreducible, flips.is_empty());
        prop_assert_eq!(report.flipping_subsets.len(), flips.len());
    }

    #[test]
    fn linear_logistic_orientation_is_consistent(
        w in prop::collection::vec(-3.0f64..3.0, 1..6),
        shift in prop::collection::vec(0.1f64..1.0, 6),
    ) {
        let n = w.len();
        let x = Instance::from_numbers(&vec![0.0; n]).unwrap();
        let c = Instance::from_numbers(&shift[..n]).unwrap();
        let mut model = LinearModel::new(w, 0.0, Squash::Logistic);
        let s = model.score_batch(&[x.clone(), c.clone()]).unwrap();
        let case = ExplanationCase::new(x.clone(), c.clone(), 0.5, s[0], s[1]).unwrap();
        let delta = compute_delta(&x, &c, 0.0).unwrap();
        let (map, phi) = countershapley_all(&case, &delta, &mut model, &CoalitionOptions::default()).unwrap();
        prop_assert!(phi.total_worth() >= 0.0);
        prop_assert_eq!(map.base(), s[0]);
        prop_assert_eq!(map.full(), s[1]);
    }
}

#[test]
fn enumeration_respects_the_size_cap() {
    let x = Instance::from_numbers(&[0.0; 5]).unwrap();
    let c = Instance::from_numbers(&[1.0; 5]).unwrap();
    let mut model = LinearModel::new(vec![0.1; 5], 0.0, Squash::Logistic);
    let s = model.score_batch(&[x.clone(), c.clone()]).unwrap();
    let case = ExplanationCase::new(x.clone(), c.clone(), 0.5, s[0], s[1]).unwrap();
    let delta = compute_delta(&x, &c, 0.0).unwrap();
    let opts = CoalitionOptions {
        max_k: 4,
        ..CoalitionOptions::default()
    };
    let err = countershapley_all(&case, &delta, &mut model, &opts).unwrap_err();
    assert!(matches!(err, cfikit::Error::DeltaTooLarge { k: 5, cap: 4 }), "{err:?}");
}
