use std::collections::BTreeMap;
use std::path::Path;

use cfikit::{CoalitionMap, CounterShapleyValues, Delta, ExplanationCase, GreedyResult, ValidationReport};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything one `explain` run produced, in a replayable JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfiReport {
    pub schema_version: u32,
    pub model: String,
    pub case: ExplanationCase,
    pub delta: Delta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greedy: Option<GreedyResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub countershapley: Option<CounterShapleyValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coalition_scores: Option<CoalitionMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    /// Model evaluations made by the importance engines.
    pub model_call_count: u64,
    /// Evaluations spent scoring the factual and counterfactual up front.
    pub case_scoring_calls: u64,
    pub decisions: BTreeMap<String, String>,
}

impl CfiReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        let report: CfiReport = serde_json::from_str(s).map_err(|e| e.to_string())?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                report.schema_version
            ));
        }
        Ok(report)
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read report {}: {e}", path.display()))?;
        Self::from_json_str(&text)
    }
}
