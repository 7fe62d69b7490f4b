//! The machine-readable run summary.

use std::collections::BTreeMap;

use serde::Serialize;

/// Axis crossings: a count, or `"N/A"` when the property does not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Crossings {
    Count(usize),
    NotApplicable(&'static str),
}

impl Crossings {
    pub const NA: Crossings = Crossings::NotApplicable("N/A");
}

/// Fields that a verb does not compute are `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub scenario_hash: String,
    pub tool_version: &'static str,
    pub max_velocity_discrepancy: Option<f64>,
    pub continuity_residual_norms: Option<Vec<f64>>,
    pub crossings_total: Option<Crossings>,
    #[serde(rename = "screen_L1")]
    pub screen_l1: Option<f64>,
    pub force_discrepancy: Option<f64>,
    /// Seconds; left out of the summary file so reruns are byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    /// Verb-specific diagnostics.
    pub details: BTreeMap<&'static str, serde_json::Value>,
    /// Threshold violations; empty on success.
    pub violations: Vec<String>,
    pub passed: bool,
}

impl RunSummary {
    pub fn new(command: &'static str, scenario_hash: String) -> Self {
        Self {
            command,
            scenario_hash,
            tool_version: crate::output::TOOL_VERSION,
            max_velocity_discrepancy: None,
            continuity_residual_norms: None,
            crossings_total: None,
            screen_l1: None,
            force_discrepancy: None,
            wall_time: None,
            details: BTreeMap::new(),
            violations: Vec::new(),
            passed: true,
        }
    }

    pub fn detail(&mut self, key: &'static str, value: impl Serialize) {
        self.details
            .insert(key, serde_json::to_value(value).expect("details serialize"));
    }

    /// Records a violation unless `ok`.
    pub fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(what());
            self.passed = false;
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summaries serialize");
        s.push('\n');
        s
    }
}
