//! Importance values for the feature changes of a counterfactual explanation.
//!
//! Given a factual instance, a counterfactual for it and a black-box scoring
//! model, this crate computes
//!
//! - greedy importances ([`greedy::greedy_cfi`]): the marginal score gain of
//!   each change along the steepest-ascent path from factual to counterfactual;
//! - exact CounterShapley values ([`countershapley::countershapley_all`]):
//!   Shapley values of the changes, with the factual as the empty coalition;
//! - property checks ([`validation`]): class flip, irreducibility, negative
//!   contributions;
//! - SVG charts ([`charts`]): greedy path, CounterShapley bar, constellation.

pub mod charts;
pub mod coalition;
pub mod countershapley;
pub mod error;
pub mod greedy;
pub mod instance;
pub mod models;
pub mod validation;

pub use coalition::Coalition;
pub use countershapley::{
    build_coalition_map, countershapley_all, countershapley_value, permutation_oracle, CoalitionMap,
    CoalitionOptions, CounterShapleyValues,
};
pub use error::{Error, Result};
pub use greedy::{greedy_cfi, greedy_from_map, GreedyResult, GreedyStep};
pub use instance::{
    apply_changes, compute_delta, orient, Delta, ExplanationCase, FeatureValue, Instance, Orientation,
};
pub use models::{load_model, CountingModel, LoadOptions, Model, ModelSpec};
pub use validation::{find_flipping_subsets, validate_counterfactual, ValidationReport};
