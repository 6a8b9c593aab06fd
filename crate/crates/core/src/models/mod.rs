//! Black-box scoring contract and the built-in evaluators.
//!
//! Every model is driven through [`Model::score_batch`]: a list of instances
//! in, one class-1 probability per instance out, order preserved. The linear,
//! table and tree models are pure and exist mostly to give exact oracles;
//! [`ExecModel`] talks to an external process over newline-delimited JSON.

mod exec;
mod linear;
mod table;
mod tree;

use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

pub use exec::{ExecModel, PROTOCOL_VERSION};
pub use linear::{LinearModel, Squash};
pub use table::TableModel;
pub use tree::{TreeModel, TreeNode};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Environment variable bounding each bridge round-trip, in milliseconds.
pub const BRIDGE_TIMEOUT_ENV: &str = "CFIKIT_BRIDGE_TIMEOUT_MS";
pub const DEFAULT_BRIDGE_TIMEOUT: Duration = Duration::from_millis(30_000);

pub trait Model: Send {
    /// Scores every instance, preserving order.
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>>;

    fn score(&mut self, instance: &Instance) -> Result<f64> {
        let scores = self.score_batch(std::slice::from_ref(instance))?;
        Ok(scores[0])
    }
}

impl<M: Model + ?Sized> Model for Box<M> {
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        (**self).score_batch(instances)
    }
}

impl<M: Model + ?Sized> Model for &mut M {
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        (**self).score_batch(instances)
    }
}

/// Wraps a model and counts how many instances it has been asked to score.
#[derive(Debug)]
pub struct CountingModel<M> {
    inner: M,
    evaluations: u64,
    batches: u64,
}

impl<M: Model> CountingModel<M> {
    pub fn new(inner: M) -> Self {
        CountingModel {
            inner,
            evaluations: 0,
            batches: 0,
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn batches(&self) -> u64 {
        self.batches
    }

    pub fn reset(&mut self) {
        self.evaluations = 0;
        self.batches = 0;
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: Model> Model for CountingModel<M> {
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        self.evaluations += instances.len() as u64;
        self.batches += 1;
        self.inner.score_batch(instances)
    }
}

/// Checks a returned batch: right length, every score finite and in `[0, 1]`.
pub fn check_scores(scores: &[f64], expected: usize) -> Result<()> {
    if scores.len() != expected {
        return Err(Error::Protocol(format!(
            "expected {expected} scores, got {}",
            scores.len()
        )));
    }
    match scores
        .iter()
        .position(|s| !(s.is_finite() && (0.0..=1.0).contains(s)))
    {
        Some(position) => Err(Error::ScoreOutOfRange {
            position,
            score: scores[position],
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Table,
    Tree,
    Exec,
}

/// `kind:source`, e.g. `linear:model.json` or `exec:python3 bridge.py`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub source: String,
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, source) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("model spec `{s}` is missing `kind:`")))?;
        let kind = match kind {
            "linear" => ModelKind::Linear,
            "table" => ModelKind::Table,
            "tree" => ModelKind::Tree,
            "exec" => ModelKind::Exec,
            other => return Err(Error::Parse(format!("unknown model kind `{other}`"))),
        };
        if source.trim().is_empty() {
            return Err(Error::Parse("model spec has an empty source".into()));
        }
        Ok(ModelSpec {
            kind,
            source: source.to_owned(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub bridge_timeout: Duration,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            bridge_timeout: DEFAULT_BRIDGE_TIMEOUT,
        }
    }
}

impl LoadOptions {
    /// Reads [`BRIDGE_TIMEOUT_ENV`], falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(BRIDGE_TIMEOUT_ENV) {
            Ok(v) => {
                let ms: u64 = v.trim().parse().map_err(|_| {
                    Error::Parse(format!("{BRIDGE_TIMEOUT_ENV} must be an integer, got `{v}`"))
                })?;
                Ok(LoadOptions {
                    bridge_timeout: Duration::from_millis(ms),
                })
            }
            Err(_) => Ok(LoadOptions::default()),
        }
    }
}

pub fn load_model(spec: &ModelSpec, options: &LoadOptions) -> Result<Box<dyn Model>> {
    Ok(match spec.kind {
        ModelKind::Linear => Box::new(LinearModel::from_path(Path::new(&spec.source))?),
        ModelKind::Table => Box::new(TableModel::from_path(Path::new(&spec.source))?),
        ModelKind::Tree => Box::new(TreeModel::from_path(Path::new(&spec.source))?),
        ModelKind::Exec => Box::new(ExecModel::spawn(&spec.source, options.bridge_timeout)?),
    })
}

pub(crate) fn read_model_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read model file {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_grammar() {
        let s: ModelSpec = "linear:weights.json".parse().unwrap();
        assert_eq!(s.kind, ModelKind::Linear);
        assert_eq!(s.source, "weights.json");
        let s: ModelSpec = "exec:python3 -u bridge.py --flag a:b".parse().unwrap();
        assert_eq!(s.kind, ModelKind::Exec);
        assert_eq!(s.source, "python3 -u bridge.py --flag a:b");
        assert!("forest:x".parse::<ModelSpec>().is_err());
        assert!("linear:".parse::<ModelSpec>().is_err());
        assert!("nothing".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn missing_file_is_parse_error() {
        let spec: ModelSpec = "tree:/definitely/not/here.json".parse().unwrap();
        assert!(matches!(
            load_model(&spec, &LoadOptions::default()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn score_checks() {
        assert!(check_scores(&[0.0, 0.5, 1.0], 3).is_ok());
        assert!(matches!(check_scores(&[0.5], 2), Err(Error::Protocol(_))));
        assert!(matches!(
            check_scores(&[0.5, 1.5], 2),
            Err(Error::ScoreOutOfRange { position: 1, .. })
        ));
        assert!(matches!(
            check_scores(&[f64::NAN], 1),
            Err(Error::ScoreOutOfRange { position: 0, .. })
        ));
    }

    #[test]
    fn counting_wrapper_counts_instances() {
        let mut m = CountingModel::new(LinearModel::new(vec![1.0], 0.0, Squash::Clip01));
        let xs = vec![Instance::from_numbers(&[0.1]).unwrap(); 3];
        m.score_batch(&xs).unwrap();
        m.score(&xs[0]).unwrap();
        assert_eq!(m.evaluations(), 4);
        assert_eq!(m.batches(), 2);
    }
}
